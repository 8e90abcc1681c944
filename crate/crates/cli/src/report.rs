use probing::eval::{Method, PolicyValueReport};
use serde_json::{json, Map, Value};

/// Where a metric came from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Provenance {
    Exact,
    MonteCarlo(usize),
    Oracle,
}

impl Provenance {
    fn label(self) -> String {
        match self {
            Provenance::Exact => "exact".into(),
            Provenance::MonteCarlo(trials) => format!("monte_carlo({trials})"),
            Provenance::Oracle => "oracle".into(),
        }
    }
}

/// Output of one command; checks decide the exit status.
#[derive(Debug, Default)]
pub struct RunReport {
    pub command: Vec<String>,
    pub config: Map<String, Value>,
    pub warnings: Vec<String>,
    metrics: Vec<(String, Value)>,
    ratios: Vec<(String, String, String, f64)>,
    checks: Vec<(String, bool, String)>,
    details: Vec<(String, Value)>,
}

impl RunReport {
    pub fn new(command: Vec<String>) -> Self {
        RunReport {
            command,
            ..Default::default()
        }
    }

    pub fn config(&mut self, key: &str, value: impl Into<Value>) {
        self.config.insert(key.into(), value.into());
    }

    pub fn metric(&mut self, name: &str, value: f64, provenance: Provenance) {
        self.metrics.push((
            name.into(),
            json!({ "value": value, "provenance": provenance.label() }),
        ));
    }

    pub fn estimate(&mut self, name: &str, report: &PolicyValueReport) {
        let provenance = match report.method {
            Method::Exact => Provenance::Exact,
            Method::MonteCarlo => Provenance::MonteCarlo(report.trials),
            Method::Oracle => Provenance::Oracle,
        };
        let mut entry = json!({ "value": report.mean, "provenance": provenance.label() });
        if report.method == Method::MonteCarlo {
            entry["std_error"] = json!(report.std_error);
            entry["radius"] = json!(report.radius);
        }
        self.metrics.push((name.into(), entry));
    }

    pub fn metric_value(&self, name: &str) -> Option<f64> {
        self.metrics
            .iter()
            .find(|(n, _)| n == name)
            .and_then(|(_, v)| v["value"].as_f64())
    }

    /// Adds `numerator / denominator`, both named metrics already present.
    pub fn ratio(&mut self, name: &str, numerator: &str, denominator: &str) {
        if let (Some(a), Some(b)) = (self.metric_value(numerator), self.metric_value(denominator)) {
            let value = if b == 0.0 { f64::NAN } else { a / b };
            self.ratios
                .push((name.into(), numerator.into(), denominator.into(), value));
        }
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push((name.into(), passed, detail.into()));
    }

    pub fn detail(&mut self, name: &str, value: Value) {
        self.details.push((name.into(), value));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|(_, ok, _)| *ok)
    }

    pub fn to_value(&self) -> Value {
        let metrics: Map<String, Value> = self.metrics.iter().cloned().collect();
        let ratios: Vec<Value> = self
            .ratios
            .iter()
            .map(|(name, num, den, value)| {
                json!({ "name": name, "numerator": num, "denominator": den, "value": value })
            })
            .collect();
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|(name, ok, detail)| json!({ "name": name, "passed": ok, "detail": detail }))
            .collect();
        let details: Map<String, Value> = self.details.iter().cloned().collect();
        json!({
            "command": self.command,
            "config": self.config,
            "warnings": self.warnings,
            "metrics": metrics,
            "ratios": ratios,
            "checks": checks,
            "details": details,
            "passed": self.passed(),
        })
    }

    pub fn render_json(&self) -> String {
        probing::format::write_json(&self.to_value())
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("command: {}\n", self.command.join(" "));
        for (k, v) in &self.config {
            out.push_str(&format!("config.{k}: {}\n", plain(v)));
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        for (name, v) in &self.metrics {
            out.push_str(&format!(
                "{name}: {} [{}]",
                plain(&v["value"]),
                plain(&v["provenance"])
            ));
            if let Some(r) = v.get("radius") {
                out.push_str(&format!(" ±{}", plain(r)));
            }
            out.push('\n');
        }
        for (name, num, den, value) in &self.ratios {
            out.push_str(&format!("{name}: {value} ({num} / {den})\n"));
        }
        for (name, v) in &self.details {
            out.push_str(&format!("{name}: {}\n", v));
        }
        for (name, ok, detail) in &self.checks {
            out.push_str(&format!(
                "{} {name}: {detail}\n",
                if *ok { "PASS" } else { "FAIL" }
            ));
        }
        out.push_str(&format!(
            "overall: {}\n",
            if self.passed() { "PASS" } else { "FAIL" }
        ));
        out
    }
}

fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
