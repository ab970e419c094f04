//! Process exit codes, one per error class.
//!
//! | code | class |
//! |---|---|
//! | 0 | success |
//! | 1 | unexpected failure |
//! | 2 | usage (bad flags) |
//! | 3 | io |
//! | 4 | format |
//! | 5 | config |
//! | 6 | domain |
//! | 7 | contract |
//! | 8 | convergence |
//! | 9 | insufficient-instruments |
//! | 10 | degenerate-instruments |
//! | 11 | pipeline |
//! | 12 | experiment |

use rivw_core::Error;

pub const UNEXPECTED: u8 = 1;

pub fn code_for_class(class: &str) -> u8 {
    match class {
        "io" => 3,
        "format" => 4,
        "config" => 5,
        "domain" => 6,
        "contract" => 7,
        "convergence" => 8,
        "insufficient-instruments" => 9,
        "degenerate-instruments" => 10,
        "pipeline" => 11,
        "experiment" => 12,
        _ => UNEXPECTED,
    }
}

pub fn code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return code_for_class(e.class());
        }
        if cause.downcast_ref::<toml::de::Error>().is_some() || cause.downcast_ref::<serde_json::Error>().is_some() {
            return code_for_class("config");
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return code_for_class("io");
        }
    }
    UNEXPECTED
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn every_class_has_a_distinct_code() {
        let errors = [
            Error::Domain(String::new()),
            Error::Contract(String::new()),
            Error::Convergence {
                value: 0.0,
                error_estimate: 0.0,
                subdivisions: 0,
            },
            Error::InsufficientInstruments { found: 0, required: 3 },
            Error::DegenerateInstruments { denominator: 0.0 },
            Error::Config(String::new()),
            Error::Format {
                path: "x".into(),
                message: String::new(),
            },
            Error::Io {
                path: "x".into(),
                source: std::io::Error::other("x"),
            },
            Error::Pipeline(String::new()),
            Error::Experiment(String::new()),
        ];
        let codes: HashSet<u8> = errors.into_iter().map(|e| code_for(&e.into())).collect();
        assert_eq!(codes.len(), 10);
        assert!(!codes.contains(&UNEXPECTED) && !codes.contains(&0) && !codes.contains(&2));
    }

    #[test]
    fn wrapped_errors_keep_their_code() {
        let e = anyhow::Error::from(Error::Pipeline("x".into())).context("while analyzing");
        assert_eq!(code_for(&e), 11);
        assert_eq!(code_for(&anyhow::anyhow!("plain")), UNEXPECTED);
    }
}
