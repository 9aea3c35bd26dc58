//! Result documents (JSON and CSV).
//!
//! JSON keys are sorted and every floating-point number is printed with 17
//! significant digits, so a document parses back to the identical
//! [`Aggregate`] and equal aggregates produce byte-identical documents.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::str::FromStr;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::noise::{InsertionPolicy, NoiseSpec};
use crate::sampler::{hoeffding_halfwidth, Aggregate, Estimate, SamplingPlan};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::InvalidArgument(format!("unknown output format `{other}`"))),
        }
    }
}

/// Renders `agg` in the requested format.
pub fn emit_result(agg: &Aggregate, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => Ok(emit_json(agg)),
        OutputFormat::Csv => emit_csv(agg),
    }
}

fn halfwidth(agg: &Aggregate) -> f64 {
    hoeffding_halfwidth(agg.plan.num_properties, agg.plan.delta, agg.runs)
}

fn to_value(agg: &Aggregate) -> Value {
    let hw = halfwidth(agg);
    let estimates: Vec<Value> = agg
        .estimates
        .iter()
        .map(|e| {
            json!({
                "label": e.label,
                "value": e.mean,
                "hoeffding_halfwidth": hw,
                "stderr": e.stderr,
            })
        })
        .collect();
    let histogram: Map<String, Value> = agg.histogram.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    json!({
        "circuit": agg.circuit,
        "n": agg.num_qubits,
        "M": agg.runs,
        "noise": {
            "p_depol": agg.noise.p_depol,
            "p_damp": agg.noise.p_damp,
            "p_flip": agg.noise.p_flip,
            "policy": serde_json::to_value(&agg.noise.policy).expect("policy serializes"),
        },
        "plan": {
            "L": agg.plan.num_properties,
            "epsilon": agg.plan.epsilon,
            "delta": agg.plan.delta,
        },
        "seed": agg.seed,
        "workers": agg.workers,
        "histogram": histogram,
        "estimates": estimates,
        "error_events": agg.error_events,
        "wall_time_s": agg.wall_time_s,
    })
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, k: usize| out.extend(std::iter::repeat_n(' ', k));
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => {
                let _ = write!(out, "{u}");
            }
            (None, Some(i)) => {
                let _ = write!(out, "{i}");
            }
            _ => out.push_str(&fmt_f64(n.as_f64().expect("json number"))),
        },
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, indent + 2);
                write_value(out, item, indent + 2);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            // serde_json's default map is ordered by key.
            for (i, (k, item)) in map.iter().enumerate() {
                pad(out, indent + 2);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(out, item, indent + 2);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

fn emit_json(agg: &Aggregate) -> String {
    let mut out = String::new();
    write_value(&mut out, &to_value(agg), 0);
    out.push('\n');
    out
}

fn emit_csv(agg: &Aggregate) -> Result<String> {
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv output failed: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["record", "key", "value", "hoeffding_halfwidth", "stderr"]).map_err(io)?;
    let meta = [
        ("circuit", agg.circuit.clone()),
        ("n", agg.num_qubits.to_string()),
        ("M", agg.runs.to_string()),
        ("seed", agg.seed.to_string()),
        ("workers", agg.workers.to_string()),
        ("p_depol", fmt_f64(agg.noise.p_depol)),
        ("p_damp", fmt_f64(agg.noise.p_damp)),
        ("p_flip", fmt_f64(agg.noise.p_flip)),
        ("L", agg.plan.num_properties.to_string()),
        ("epsilon", fmt_f64(agg.plan.epsilon)),
        ("delta", fmt_f64(agg.plan.delta)),
        ("error_events", agg.error_events.to_string()),
        ("wall_time_s", fmt_f64(agg.wall_time_s)),
    ];
    for (k, v) in meta {
        w.write_record(["meta", k, &v, "", ""]).map_err(io)?;
    }
    for (bits, count) in &agg.histogram {
        w.write_record(["histogram", bits, &count.to_string(), "", ""]).map_err(io)?;
    }
    let hw = fmt_f64(halfwidth(agg));
    for e in &agg.estimates {
        let stderr = e.stderr.map(fmt_f64).unwrap_or_default();
        w.write_record(["estimate", &e.label, &fmt_f64(e.mean), &hw, &stderr]).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv output failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key)
        .ok_or_else(|| Error::InvalidArgument(format!("result document lacks `{key}`")))
}

fn num(v: &Value, key: &str) -> Result<f64> {
    field(v, key)?
        .as_f64()
        .ok_or_else(|| Error::InvalidArgument(format!("`{key}` is not a number")))
}

fn uint(v: &Value, key: &str) -> Result<u64> {
    field(v, key)?
        .as_u64()
        .ok_or_else(|| Error::InvalidArgument(format!("`{key}` is not an unsigned integer")))
}

/// Parses a JSON document written by [`emit_result`] back into an [`Aggregate`].
pub fn parse_result(document: &str) -> Result<Aggregate> {
    let bad = |e: serde_json::Error| Error::InvalidArgument(format!("malformed result document: {e}"));
    let v: Value = serde_json::from_str(document).map_err(bad)?;
    let noise = field(&v, "noise")?;
    let policy: InsertionPolicy = serde_json::from_value(field(noise, "policy")?.clone()).map_err(bad)?;
    let plan = field(&v, "plan")?;
    let mut histogram = BTreeMap::new();
    for (k, c) in field(&v, "histogram")?
        .as_object()
        .ok_or_else(|| Error::InvalidArgument("`histogram` is not an object".into()))?
    {
        let c = c
            .as_u64()
            .ok_or_else(|| Error::InvalidArgument(format!("count of `{k}` is not an integer")))?;
        histogram.insert(k.clone(), c);
    }
    let mut estimates = Vec::new();
    for e in field(&v, "estimates")?
        .as_array()
        .ok_or_else(|| Error::InvalidArgument("`estimates` is not an array".into()))?
    {
        let stderr = match field(e, "stderr")? {
            Value::Null => None,
            _ => Some(num(e, "stderr")?),
        };
        estimates.push(Estimate {
            label: field(e, "label")?
                .as_str()
                .ok_or_else(|| Error::InvalidArgument("`label` is not a string".into()))?
                .to_string(),
            mean: num(e, "value")?,
            stderr,
        });
    }
    let runs = uint(&v, "M")?;
    Ok(Aggregate {
        circuit: field(&v, "circuit")?
            .as_str()
            .ok_or_else(|| Error::InvalidArgument("`circuit` is not a string".into()))?
            .to_string(),
        num_qubits: uint(&v, "n")? as usize,
        noise: NoiseSpec {
            p_depol: num(noise, "p_depol")?,
            p_damp: num(noise, "p_damp")?,
            p_flip: num(noise, "p_flip")?,
            policy,
        },
        plan: SamplingPlan {
            num_properties: uint(plan, "L")? as usize,
            epsilon: num(plan, "epsilon")?,
            delta: num(plan, "delta")?,
            num_runs: runs,
        },
        runs,
        seed: uint(&v, "seed")?,
        histogram,
        estimates,
        error_events: uint(&v, "error_events")?,
        workers: uint(&v, "workers")? as usize,
        wall_time_s: num(&v, "wall_time_s")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::generate_ghz;
    use crate::noise::NoiseSite;
    use crate::sampler::{plan_samples, run_ensemble, PropertySpec};

    fn sample(m: u64, props: &[PropertySpec]) -> Aggregate {
        let c = generate_ghz(3).unwrap();
        let spec = NoiseSpec {
            p_depol: 0.01,
            p_damp: 0.02,
            p_flip: 0.01,
            policy: InsertionPolicy::OperandsOnly,
        };
        let plan = plan_samples(props.len().max(1), 0.1, 0.05).unwrap().with_runs(m).unwrap();
        run_ensemble(&c, &spec, &plan, props, 2, 17).unwrap()
    }

    #[test]
    fn json_round_trip() {
        let c = generate_ghz(3).unwrap();
        let agg = sample(200, &[PropertySpec::basis(&[false; 3]), PropertySpec::ideal_fidelity(&c)]);
        let doc = emit_result(&agg, OutputFormat::Json).unwrap();
        assert_eq!(parse_result(&doc).unwrap(), agg);
    }

    #[test]
    fn sites_policy_round_trips() {
        let mut agg = sample(3, &[]);
        agg.noise.policy = InsertionPolicy::Sites(vec![NoiseSite { op_index: 1, qubit: 0 }]);
        let doc = emit_result(&agg, OutputFormat::Json).unwrap();
        assert_eq!(parse_result(&doc).unwrap(), agg);
    }

    #[test]
    fn keys_are_sorted_and_floats_have_17_digits() {
        let agg = sample(10, &[PropertySpec::basis(&[true; 3])]);
        let doc = emit_result(&agg, OutputFormat::Json).unwrap();
        let top: Vec<&str> = doc
            .lines()
            .filter(|l| l.starts_with("  \""))
            .map(|l| l.trim().split('"').nth(1).unwrap())
            .collect();
        let mut sorted = top.clone();
        sorted.sort();
        assert_eq!(top, sorted);
        assert!(top.contains(&"wall_time_s") && top.contains(&"workers"));
        assert!(doc.contains("\"p_depol\": 1.0000000000000000e-2"));
    }

    #[test]
    fn empty_property_list() {
        let agg = sample(5, &[]);
        let doc = emit_result(&agg, OutputFormat::Json).unwrap();
        let v: Value = serde_json::from_str(&doc).unwrap();
        assert_eq!(v["estimates"], json!([]));
    }

    #[test]
    fn single_run_has_null_stderr() {
        let agg = sample(1, &[PropertySpec::basis(&[false; 3])]);
        let doc = emit_result(&agg, OutputFormat::Json).unwrap();
        let v: Value = serde_json::from_str(&doc).unwrap();
        assert_eq!(v["estimates"][0]["stderr"], Value::Null);
        assert_eq!(v["M"], json!(1));
    }

    #[test]
    fn equal_aggregates_give_identical_bytes() {
        let a = sample(50, &[PropertySpec::basis(&[false; 3])]);
        let b = sample(50, &[PropertySpec::basis(&[false; 3])]);
        assert_eq!(
            emit_result(&a.reproducible(), OutputFormat::Json).unwrap(),
            emit_result(&b.reproducible(), OutputFormat::Json).unwrap()
        );
    }

    #[test]
    fn csv_flattens_histogram() {
        let agg = sample(100, &[PropertySpec::basis(&[false; 3])]);
        let doc = emit_result(&agg, OutputFormat::Csv).unwrap();
        let mut r = csv::Reader::from_reader(doc.as_bytes());
        let mut total = 0;
        let mut estimates = 0;
        for rec in r.records() {
            let rec = rec.unwrap();
            match &rec[0] {
                "histogram" => total += rec[2].parse::<u64>().unwrap(),
                "estimate" => {
                    estimates += 1;
                    assert_eq!(rec[2].parse::<f64>().unwrap(), agg.estimates[0].mean);
                }
                _ => {}
            }
        }
        assert_eq!(total, 100);
        assert_eq!(estimates, 1);
    }

    #[test]
    fn format_names() {
        assert_eq!("JSON".parse::<OutputFormat>().unwrap(), OutputFormat::Json);
        assert_eq!("csv".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
