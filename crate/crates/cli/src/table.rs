use std::io::Write;

use serde::Serialize;

use crate::CliError;

/// One named pass/fail outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Assertion {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Assertion {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        if self.detail.is_empty() {
            format!("{}: {status}", self.name)
        } else {
            format!("{}: {status} ({})", self.name, self.detail)
        }
    }
}

/// Experiment output: a CSV body plus the assertions evaluated on it.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub experiment: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub seed: u64,
    pub assertions: Vec<Assertion>,
}

impl ResultTable {
    pub fn new(experiment: &str, header: &[&str], seed: u64) -> Self {
        ResultTable {
            experiment: experiment.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
            seed,
            assertions: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.assertions.push(Assertion::new(name, pass, detail));
    }

    pub fn all_pass(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    /// Header, data rows, then `#`-prefixed footer lines with the seed and
    /// crate version. Wall time is deliberately left out so identical runs
    /// give identical files.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), CliError> {
        {
            let mut out = csv::Writer::from_writer(&mut w);
            out.write_record(&self.header)?;
            for r in &self.rows {
                out.write_record(r)?;
            }
            out.flush()?;
        }
        writeln!(w, "# experiment={}", self.experiment)?;
        writeln!(w, "# seed={}", self.seed)?;
        writeln!(w, "# version={}", env!("CARGO_PKG_VERSION"))?;
        Ok(())
    }

    pub fn summary(&self, wall_time_s: f64) -> Summary {
        Summary {
            experiment: self.experiment.clone(),
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION"),
            rows: self.rows.len(),
            wall_time_s,
            pass: self.all_pass(),
            assertions: self.assertions.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub seed: u64,
    pub version: &'static str,
    pub rows: usize,
    pub wall_time_s: f64,
    pub pass: bool,
    pub assertions: Vec<Assertion>,
}

/// Shortest round-tripping decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_and_footer() {
        let mut t = ResultTable::new("demo", &["a", "b"], 42);
        t.push_row(vec!["1".into(), "x,y".into()]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            format!(
                "a,b\n1,\"x,y\"\n# experiment=demo\n# seed=42\n# version={}\n",
                env!("CARGO_PKG_VERSION")
            )
        );
    }

    #[test]
    fn lines() {
        assert_eq!(Assertion::new("c", true, "").line(), "c: PASS");
        assert_eq!(Assertion::new("c", false, "d").line(), "c: FAIL (d)");
        let mut t = ResultTable::new("e", &[], 0);
        assert!(t.all_pass());
        t.check("x", false, "");
        assert!(!t.all_pass());
    }
}
