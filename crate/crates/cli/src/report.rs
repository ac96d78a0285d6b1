use std::fmt::Write as _;

use kontact::symexpr::ZeroVerdict;
use kontact::Config;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

impl From<ZeroVerdict> for Verdict {
    fn from(v: ZeroVerdict) -> Self {
        match v {
            ZeroVerdict::Zero => Verdict::Pass,
            ZeroVerdict::NonZero => Verdict::Fail,
            ZeroVerdict::Inconclusive => Verdict::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub seed: u64,
    pub samples: usize,
    pub atol: f64,
    pub rtol: f64,
    pub rank_threshold: f64,
}

impl From<&Config> for ConfigEcho {
    fn from(c: &Config) -> Self {
        ConfigEcho { seed: c.seed, samples: c.samples, atol: c.atol, rtol: c.rtol, rank_threshold: c.rank_threshold }
    }
}

/// Common envelope for every subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub config: ConfigEcho,
    pub status: Verdict,
    pub max_residual: f64,
    pub checks: Vec<Check>,
    pub data: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl Report {
    pub fn new(command: &str, cfg: &Config) -> Self {
        Report {
            command: command.into(),
            config: cfg.into(),
            status: Verdict::Pass,
            max_residual: 0.0,
            checks: Vec::new(),
            data: serde_json::Value::Null,
            timestamp: None,
            wall_time_s: None,
        }
    }

    pub fn check(&mut self, name: &str, verdict: Verdict, max_residual: Option<f64>) -> &mut Check {
        if let Some(r) = max_residual {
            self.max_residual = self.max_residual.max(r);
        }
        self.status = match (self.status, verdict) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            _ => Verdict::Pass,
        };
        self.checks.push(Check { name: name.into(), verdict, max_residual, detail: None });
        self.checks.last_mut().expect("just pushed")
    }

    pub fn pass_if(&mut self, name: &str, ok: bool) -> &mut Check {
        self.check(name, Verdict::from_bool(ok), None)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// 0 all pass, 1 any failure, 3 inconclusive.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Inconclusive => 3,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = write!(out, "{:<13}{}", c.verdict.label(), c.name);
            if let Some(r) = c.max_residual {
                let _ = write!(out, "  (max residual {r:.3e})");
            }
            if let Some(d) = &c.detail {
                let _ = write!(out, "  {d}");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "{}: {}", self.command, self.status.label());
        out
    }
}
