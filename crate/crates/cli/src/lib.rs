//! Configuration, orchestration and file output for the `mgd` binary.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{cmd_check, cmd_convergence, cmd_run, cmd_sweep, output_dir, CliError, Status};
pub use config::{parse_config, parse_config_str, Config, ConfigError, MeshSource, Problem};
pub use output::{ledger_table, write_csv, write_csv_to, write_vtk, write_vtk_to, Summary, Table, VtkFields};
