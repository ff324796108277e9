//! Check results and the run report.

use serde::Serialize;

use crate::csv::Csv;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub id: usize,
    pub name: String,
    /// Headline measurement.
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
    /// Every number the check measured, in a fixed order.
    pub measurements: Vec<f64>,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {:<28} value={:<12.4e} threshold={:<10.3e} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.value,
            self.threshold,
            self.detail
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvStamp {
    pub version: String,
    pub master_seed: u64,
    pub grid: String,
    pub threads: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub checks: Vec<CheckResult>,
    pub env: EnvStamp,
}

impl RunReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut csv = Csv::new(&["id", "name", "value", "threshold", "passed", "detail"]);
        for c in &self.checks {
            csv.row(&[
                c.id.to_string(),
                c.name.clone(),
                format!("{:e}", c.value),
                format!("{:e}", c.threshold),
                c.passed.to_string(),
                format!("\"{}\"", c.detail.replace('"', "'")),
            ]);
        }
        csv.finish()
    }
}
