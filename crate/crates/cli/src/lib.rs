//! Experiment runner around the kerrcat library.
//!
//! [`config`] parses flat key = value files into validated run descriptions,
//! [`experiments`] turns a description into a [`table::SweepTable`] of
//! numeric-versus-analytic columns, and [`acceptance`] holds the criterion
//! checks behind the `validate` subcommand.

pub mod acceptance;
pub mod config;
pub mod experiments;
pub mod table;

use kerrcat::atomic::AtomicError;
use kerrcat::fock::FockError;
use kerrcat::measure::MeasureError;
use kerrcat::optics::OpticsError;
use kerrcat::protocol::ProtocolError;
use thiserror::Error;

/// Failures while executing a validated run description.
#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Atomic(#[from] AtomicError),
    #[error("row has {got} values, table has {want} columns")]
    RowArity { got: usize, want: usize },
    #[error("non-finite value in column '{column}'")]
    NonFinite { column: String },
    #[error("cannot write '{path}': {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
}
