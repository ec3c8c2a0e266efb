//! The security-attack table as executable scenarios.
//!
//! Each row that the ledger can defend by itself has a bundled scenario.
//! Sensor tampering and feed modification are defended outside the ledger
//! (tamper-proof hardware, authenticated feeds) and are only documented.

use serde::Serialize;

use crate::runner::execute;
use crate::scenario::Scenario;

pub struct AttackRow {
    /// Attack name as it appears in reports and regressions.
    pub row: &'static str,
    pub defense: &'static str,
    pub scenario: &'static str,
}

pub const ATTACKS: [AttackRow; 7] = [
    AttackRow {
        row: "whitewashing",
        defense: "traders re-join only through the network administrator",
        scenario: include_str!("../scenarios/attack_whitewashing.scenario"),
    },
    AttackRow {
        row: "sybil",
        defense: "one registered identity per key, enrolment by the central authority",
        scenario: include_str!("../scenarios/attack_sybil.scenario"),
    },
    AttackRow {
        row: "ballot stuffing (case 1)",
        defense: "self-trades are rejected",
        scenario: include_str!("../scenarios/attack_selftrade.scenario"),
    },
    AttackRow {
        row: "ballot stuffing (case 2)",
        defense: "fake commodities never complete their product chain",
        scenario: include_str!("../scenarios/attack_ballot_stuffing_2.scenario"),
    },
    AttackRow {
        row: "bad mouthing",
        defense: "dissatisfaction-flag arbitration re-weights the buyer's ratings",
        scenario: include_str!("../scenarios/attack_bad_mouthing.scenario"),
    },
    AttackRow {
        row: "impersonation",
        defense: "every transaction is signed with the registered key",
        scenario: include_str!("../scenarios/attack_impersonation.scenario"),
    },
    AttackRow {
        row: "repudiation",
        defense: "committed transactions are immutable and cannot be replayed",
        scenario: include_str!("../scenarios/attack_repudiation.scenario"),
    },
];

/// Rows whose defense lives outside the ledger.
pub const EXTERNAL: [(&str, &str); 2] = [
    ("sensor tampering", include_str!("../../../docs/attacks/sensor_tampering.md")),
    ("feed modification", include_str!("../../../docs/attacks/feed_modification.md")),
];

#[derive(Debug, Clone, Serialize)]
pub struct AttackOutcome {
    pub row: String,
    pub scenario: String,
    pub passed: bool,
    /// Each entry is prefixed with the attack row.
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub outcomes: Vec<AttackOutcome>,
    pub external: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failures(&self) -> Vec<String> {
        self.outcomes.iter().flat_map(|o| o.failures.iter().cloned()).collect()
    }
}

pub fn run_row(row: &AttackRow) -> AttackOutcome {
    let tagged = |msg: String| format!("[{}] {msg}", row.row);
    let result = Scenario::parse(row.scenario).and_then(|s| execute(&s, None, None).map(|o| (s.name, o.report)));
    match result {
        Ok((name, report)) => {
            let failures: Vec<String> = report.failures().into_iter().map(tagged).collect();
            AttackOutcome { row: row.row.into(), scenario: name, passed: failures.is_empty(), failures }
        }
        Err(e) => AttackOutcome {
            row: row.row.into(),
            scenario: String::new(),
            passed: false,
            failures: vec![tagged(e.to_string())],
        },
    }
}

pub fn run_attack_suite() -> SuiteReport {
    SuiteReport {
        outcomes: ATTACKS.iter().map(run_row).collect(),
        external: EXTERNAL.iter().map(|(row, _)| row.to_string()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failures_name_the_row() {
        let broken = AttackRow {
            row: "sybil",
            defense: "",
            scenario: r#"format = "trustchain-scenario/1"
                [[participants]]
                id = "admin"
                role = "admin"
                [[participants]]
                id = "m"
                role = "retailer"
                [[timeline]]
                tick = 1
                action = "register"
                by = "admin"
                id = "m2"
                role = "retailer"
                key_seed = "other"
                expect = "error:DuplicateIdentity"
            "#,
        };
        let out = run_row(&broken);
        assert!(!out.passed);
        assert!(out.failures[0].starts_with("[sybil]"), "{:?}", out.failures);
    }

    #[test]
    fn external_rows_are_documented() {
        for (row, doc) in EXTERNAL {
            assert!(doc.to_lowercase().contains(row), "{row}");
        }
    }
}
