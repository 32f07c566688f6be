//! Experiment drivers and run records behind the `approj` command-line tool.
//!
//! Every experiment returns one typed row per configuration; a failing
//! solver marks its row `FAILED` instead of aborting the table. Rows are
//! written as CSV with a header line.

pub mod experiments;
pub mod record;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

pub use experiments::{
    run_asym, run_hilbert, run_poisson, run_table1, run_table2, run_table3, AsymRow, HilbertRow, PoissonRow, Table1Row,
    Table2Row, Table3Row,
};
pub use record::{RunRecord, SolverSpec};

/// Problem sizes for an experiment: `small` and `desk` are preset sizes
/// (desk is the default), `full` the largest sizes each experiment was designed
/// for, and a number scales the desk sizes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Scale {
    Small,
    #[default]
    Desk,
    Full,
    Factor(f64),
}

impl Scale {
    /// Multiplier applied to desk sizes; `Full` is handled per experiment.
    pub fn factor(self) -> f64 {
        match self {
            Scale::Small => 0.5,
            Scale::Desk | Scale::Full => 1.0,
            Scale::Factor(f) => f,
        }
    }

    /// `n * factor`, rounded, at least 2.
    pub fn size(self, n: usize) -> usize {
        ((n as f64 * self.factor()).round() as usize).max(2)
    }
}

impl FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "small" => Ok(Scale::Small),
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            _ => match s.parse::<f64>() {
                Ok(f) if f > 0.0 && f.is_finite() => Ok(Scale::Factor(f)),
                _ => Err(format!("scale must be small, desk, full or a positive number, got {s:?}")),
            },
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scale::Small => write!(f, "small"),
            Scale::Desk => write!(f, "desk"),
            Scale::Full => write!(f, "full"),
            Scale::Factor(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct BenchOptions {
    pub scale: Scale,
    /// Run the rows of a table concurrently.
    pub parallel: bool,
    /// AP sweeps per projection for the APAP runs; each experiment has its
    /// own default when unset.
    pub sweeps: Option<usize>,
}

/// The experiments `approj bench` can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Table1,
    Table2,
    Table3,
    Poisson,
    Asym,
    Hilbert,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Table1,
        Experiment::Table2,
        Experiment::Table3,
        Experiment::Poisson,
        Experiment::Asym,
        Experiment::Hilbert,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Table1 => "table1",
            Experiment::Table2 => "table2",
            Experiment::Table3 => "table3",
            Experiment::Poisson => "poisson",
            Experiment::Asym => "asym",
            Experiment::Hilbert => "hilbert",
        }
    }

    /// Runs the experiment and writes its rows as CSV.
    pub fn run_csv<W: Write>(self, opts: &BenchOptions, out: W) -> csv::Result<()> {
        match self {
            Experiment::Table1 => write_csv(&run_table1(opts), out),
            Experiment::Table2 => write_csv(&run_table2(opts), out),
            Experiment::Table3 => write_csv(&run_table3(opts), out),
            Experiment::Poisson => write_csv(&run_poisson(opts), out),
            Experiment::Asym => write_csv(&run_asym(opts), out),
            Experiment::Hilbert => write_csv(&run_hilbert(opts), out),
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| format!("unknown experiment {s:?}"))
    }
}

/// Writes `rows` as CSV with a header line.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Thread cap from the value of `BENCH_THREADS`: `None` when unset,
/// otherwise a positive integer.
pub fn parse_thread_cap(value: Option<&str>) -> Result<Option<usize>, String> {
    match value {
        None => Ok(None),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("BENCH_THREADS must be a positive integer, got {v:?}")),
        },
    }
}

/// Caps the global rayon pool at `BENCH_THREADS` threads when set. The pool
/// can be configured once per process; later calls leave it unchanged.
pub fn init_thread_pool() -> Result<(), String> {
    let value = std::env::var("BENCH_THREADS").ok();
    if let Some(n) = parse_thread_cap(value.as_deref())? {
        // An already initialised pool keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}
