pub mod scratch_mfg;
