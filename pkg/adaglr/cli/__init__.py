"""Command-line front end: argument parsing and text rendering."""
