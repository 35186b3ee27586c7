//! Columnar numeric tables with designated outcome, treatment and covariate
//! roles, plus CSV input/output.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("dataset has no rows")]
    Empty,
    #[error("column `{name}` has {got} rows, expected {expected}")]
    Ragged { name: String, got: usize, expected: usize },
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("no {0} column designated")]
    MissingRole(&'static str),
    #[error("column `{name}` row {row}: value {value} is not finite")]
    NonFinite { name: String, row: usize, value: f64 },
    #[error("treatment column `{name}` row {row}: value {value} is not 0 or 1")]
    NonBinaryTreatment { name: String, row: usize, value: f64 },
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DataError>;

/// Column roles. The outcome and treatment are optional so that raw tables
/// (e.g. simulated nodes without a causal question attached) fit the same type.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roles {
    pub outcome: Option<String>,
    pub treatment: Option<String>,
    pub covariates: Vec<String>,
}

impl Roles {
    pub fn new(outcome: &str, treatment: &str, covariates: &[&str]) -> Self {
        Roles {
            outcome: Some(outcome.to_string()),
            treatment: Some(treatment.to_string()),
            covariates: covariates.iter().map(|c| c.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    roles: Roles,
}

impl Dataset {
    /// Builds a dataset from named columns. All columns must be finite and of
    /// equal, non-zero length; role names must refer to existing columns.
    pub fn new(columns: Vec<(String, Vec<f64>)>, roles: Roles) -> Result<Self> {
        let n = columns.first().map(|(_, c)| c.len()).unwrap_or(0);
        if n == 0 {
            return Err(DataError::Empty);
        }
        let mut names = Vec::with_capacity(columns.len());
        let mut data = Vec::with_capacity(columns.len());
        for (name, col) in columns {
            if names.contains(&name) {
                return Err(DataError::DuplicateColumn(name));
            }
            if col.len() != n {
                return Err(DataError::Ragged { name, got: col.len(), expected: n });
            }
            if let Some((row, &value)) = col.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                return Err(DataError::NonFinite { name, row, value });
            }
            names.push(name);
            data.push(col);
        }
        let ds = Dataset { names, columns: data, roles: Roles::default() };
        ds.with_roles(roles)
    }

    /// Replaces the role assignment.
    pub fn with_roles(mut self, roles: Roles) -> Result<Self> {
        for name in roles.outcome.iter().chain(&roles.treatment).chain(&roles.covariates) {
            self.index(name)?;
        }
        self.roles = roles;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.columns[0].len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn roles(&self) -> &Roles {
        &self.roles
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| DataError::UnknownColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        Ok(&self.columns[self.index(name)?])
    }

    pub fn outcome(&self) -> Result<&[f64]> {
        let name = self.roles.outcome.as_deref().ok_or(DataError::MissingRole("outcome"))?;
        self.column(name)
    }

    /// Treatment column, any numeric values.
    pub fn treatment(&self) -> Result<&[f64]> {
        let name = self.roles.treatment.as_deref().ok_or(DataError::MissingRole("treatment"))?;
        self.column(name)
    }

    /// Treatment column, checked to be 0/1.
    pub fn binary_treatment(&self) -> Result<&[f64]> {
        let d = self.treatment()?;
        if let Some((row, &value)) = d.iter().enumerate().find(|(_, &v)| v != 0.0 && v != 1.0) {
            return Err(DataError::NonBinaryTreatment {
                name: self.roles.treatment.clone().unwrap_or_default(),
                row,
                value,
            });
        }
        Ok(d)
    }

    pub fn covariates(&self) -> Result<Vec<&[f64]>> {
        self.roles.covariates.iter().map(|c| self.column(c)).collect()
    }

    /// Row subset (rows may repeat), keeping names and roles.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| rows.iter().map(|&r| c[r]).collect())
            .collect();
        Dataset { names: self.names.clone(), columns, roles: self.roles.clone() }
    }

    /// Reads a CSV with a header row and numeric cells.
    pub fn read_csv<R: Read>(reader: R, roles: Roles) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let csv_err = |line: usize, message: String| DataError::Csv { line, message };
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| csv_err(1, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
        for (i, record) in rdr.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| csv_err(line, e.to_string()))?;
            if record.len() != header.len() {
                return Err(csv_err(line, format!("{} fields, expected {}", record.len(), header.len())));
            }
            for (j, cell) in record.iter().enumerate() {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| csv_err(line, format!("`{cell}` in column `{}` is not a number", header[j])))?;
                cols[j].push(v);
            }
        }
        Dataset::new(header.into_iter().zip(cols).collect(), roles)
    }

    /// Writes the table as CSV with shortest round-trip float formatting.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| DataError::Io(std::io::Error::other(e.to_string()));
        w.write_record(&self.names).map_err(io)?;
        for r in 0..self.n() {
            w.write_record(self.columns.iter().map(|c| format!("{:?}", c[r])))
                .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}
