//! Experiment harness for the mmWave-NOMA solver.
