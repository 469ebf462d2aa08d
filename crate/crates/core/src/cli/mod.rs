//! Experiment drivers and file I/O.
