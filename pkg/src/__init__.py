# Face Quality Assessment toolkit - Main package
