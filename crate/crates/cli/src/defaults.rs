//! Every default the command line falls back on, in one place.
//!
//! | flag              | subcommand        | default            |
//! |-------------------|-------------------|--------------------|
//! | `--nu`            | pii, lax-check, kernel | 0.75          |
//! | `--x-min/--x-max` | pii               | -20 / 20           |
//! | `--grid-size`     | pii               | 4001               |
//! | `--every`         | pii               | 1                  |
//! | `--s`, `--tau`    | kernel            | 0, 0               |
//! | `--s`, `--tau`    | lax-check         | -2,-0.5,0.5,2 / 0,0.5 |
//! | `--step`          | lax-check         | 1e-4               |
//! | `--grid`          | kernel            | 0.1:5:50           |
//! | `--imag-tol`      | kernel            | 1e-7               |
//! | `--n`             | finite-n, scaling | 8                  |
//! | `--a`, `--b`      | finite-n, scaling, phase, sample | 0.5, 0.5 |
//! | `--bigT`, `--t`   | finite-n          | 1, 0.5             |
//! | `--alpha`         | finite-n, scaling | 0.25               |
//! | `--grid`          | finite-n          | 0.02:1:10          |
//! | `--grid`          | scaling           | 0.5:2:3            |
//! | `--K`, `--L`      | scaling           | 0, 0               |
//! | `--precision-bits`| finite-n, scaling | max(256, 10 n), or `TACNODE_PRECISION_BITS` |
//! | `--quad-size`     | finite-n, scaling | max(40, 4 n)       |
//! | `--n`, `--m`      | sample            | 20, 64             |
//! | `--bigT`          | sample            | 1                  |
//! | `--alpha`         | sample            | 0                  |
//! | `--burn-in`       | sample            | 10000              |
//! | `--sweeps`        | sample            | 10000              |
//! | `--thin`          | sample            | 10                 |
//! | `--seed`          | sample            | 0                  |

pub const NU: f64 = 0.75;
pub const PII_X_MIN: f64 = -20.0;
pub const PII_X_MAX: f64 = 20.0;
pub const PII_GRID_SIZE: usize = 4001;
pub const LAX_S: &str = "-2,-0.5,0.5,2";
pub const LAX_TAU: &str = "0,0.5";
pub const LAX_STEP: f64 = 1e-4;
pub const KERNEL_GRID: &str = "0.1:5:50";
pub const FINITE_GRID: &str = "0.02:1:10";
pub const SCALING_GRID: &str = "0.5:2:3";
pub const PATHS: usize = 8;
pub const ENDPOINT: f64 = 0.5;
pub const FINITE_ALPHA: f64 = 0.25;
pub const SAMPLE_PATHS: usize = 20;
pub const SAMPLE_SLICES: usize = 64;
pub const SAMPLE_SEED: u64 = 0;
