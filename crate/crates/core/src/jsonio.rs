//! The on-disk distribution format and report serialization.
//!
//! A distribution file is a JSON object with keys `a_settings`, `b_settings`
//! (arrays of angles in degrees), `lambda` (array of labels) and `entries`
//! (array of cells). Each cell names the five values plus a probability `p`
//! which is either a JSON number (float mode) or a string `"n/d"` (exact
//! mode). Omitted cells are zero. A file mixing string and number
//! probabilities is rejected: exactness is all or nothing.

use crate::error::{Error, Result};
use crate::probcore::{
    format_exact, parse_exact, Angle, Exact, JointDistribution, Numeric, Outcome, VariableSpace,
};
use num_traits::Zero;
use serde_json::{json, Map, Value};

/// A loaded distribution in whichever numeric mode the file used.
#[derive(Clone, Debug)]
pub enum AnyDistribution {
    Exact(JointDistribution<Exact>),
    Float(JointDistribution<f64>),
}

impl AnyDistribution {
    pub fn space(&self) -> &VariableSpace {
        match self {
            AnyDistribution::Exact(d) => d.space(),
            AnyDistribution::Float(d) => d.space(),
        }
    }

    pub fn to_float(&self) -> JointDistribution<f64> {
        match self {
            AnyDistribution::Exact(d) => d.to_float(),
            AnyDistribution::Float(d) => d.clone(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, AnyDistribution::Exact(_))
    }
}

fn field<'v>(obj: &'v Map<String, Value>, key: &str, ctx: &str) -> Result<&'v Value> {
    obj.get(key)
        .ok_or_else(|| Error::Parse(format!("{ctx}: missing field {key:?}")))
}

fn as_array<'v>(v: &'v Value, ctx: &str) -> Result<&'v Vec<Value>> {
    v.as_array()
        .ok_or_else(|| Error::Parse(format!("{ctx}: expected an array")))
}

fn angle_list(v: &Value, ctx: &str) -> Result<Vec<Angle>> {
    as_array(v, ctx)?
        .iter()
        .enumerate()
        .map(|(i, x)| {
            x.as_f64()
                .map(Angle::from_degrees)
                .ok_or_else(|| Error::Parse(format!("{ctx}[{i}]: expected a number")))
        })
        .collect()
}

fn outcome(v: &Value, ctx: &str) -> Result<Outcome> {
    match v.as_str() {
        Some("+") => Ok(Outcome::Plus),
        Some("-") => Ok(Outcome::Minus),
        _ => Err(Error::Parse(format!("{ctx}: expected \"+\" or \"-\""))),
    }
}

/// Parses a distribution from JSON text.
pub fn load_distribution(text: &str) -> Result<AnyDistribution> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    let obj = root
        .as_object()
        .ok_or_else(|| Error::Parse("top level: expected an object".into()))?;
    let a = angle_list(field(obj, "a_settings", "top level")?, "a_settings")?;
    let b = angle_list(field(obj, "b_settings", "top level")?, "b_settings")?;
    let lambda: Vec<String> = as_array(field(obj, "lambda", "top level")?, "lambda")?
        .iter()
        .enumerate()
        .map(|(i, x)| {
            x.as_str()
                .map(str::to_owned)
                .ok_or_else(|| Error::Parse(format!("lambda[{i}]: expected a string")))
        })
        .collect::<Result<_>>()?;
    let space = VariableSpace::new(a, b, lambda)
        .map_err(|e| Error::Parse(format!("space: {e}")))?;

    let entries = as_array(field(obj, "entries", "top level")?, "entries")?;
    let mut exact_cells: Vec<(usize, Exact)> = Vec::new();
    let mut float_cells: Vec<(usize, f64)> = Vec::new();
    for (i, entry) in entries.iter().enumerate() {
        let ctx = format!("entries[{i}]");
        let cell = entry
            .as_object()
            .ok_or_else(|| Error::Parse(format!("{ctx}: expected an object")))?;
        let alpha = outcome(field(cell, "alpha", &ctx)?, &format!("{ctx}.alpha"))?;
        let beta = outcome(field(cell, "beta", &ctx)?, &format!("{ctx}.beta"))?;
        let a_angle = field(cell, "a", &ctx)?
            .as_f64()
            .map(Angle::from_degrees)
            .ok_or_else(|| Error::Parse(format!("{ctx}.a: expected a number")))?;
        let b_angle = field(cell, "b", &ctx)?
            .as_f64()
            .map(Angle::from_degrees)
            .ok_or_else(|| Error::Parse(format!("{ctx}.b: expected a number")))?;
        let lambda_label = field(cell, "lambda", &ctx)?
            .as_str()
            .ok_or_else(|| Error::Parse(format!("{ctx}.lambda: expected a string")))?;
        let asg = crate::probcore::Assignment {
            alpha,
            beta,
            a: space
                .a_index(a_angle)
                .ok_or_else(|| Error::Parse(format!("{ctx}.a: {a_angle} not in a_settings")))?,
            b: space
                .b_index(b_angle)
                .ok_or_else(|| Error::Parse(format!("{ctx}.b: {b_angle} not in b_settings")))?,
            lambda: space.lambda_index(lambda_label).ok_or_else(|| {
                Error::Parse(format!("{ctx}.lambda: {lambda_label:?} not in lambda list"))
            })?,
        };
        let index = space.flat_index(&asg);
        match field(cell, "p", &ctx)? {
            Value::String(s) => {
                let v = parse_exact(s)
                    .ok_or_else(|| Error::Parse(format!("{ctx}.p: bad rational {s:?}")))?;
                exact_cells.push((index, v));
            }
            Value::Number(n) => {
                let v = n
                    .as_f64()
                    .ok_or_else(|| Error::Parse(format!("{ctx}.p: bad number")))?;
                float_cells.push((index, v));
            }
            _ => return Err(Error::Parse(format!("{ctx}.p: expected a number or \"n/d\""))),
        }
    }
    if !exact_cells.is_empty() && !float_cells.is_empty() {
        return Err(Error::Parse(
            "entries mix exact (\"n/d\") and float probabilities; pick one mode".into(),
        ));
    }
    if !float_cells.is_empty() {
        let mut weights = vec![0.0f64; space.cell_count()];
        for (i, v) in float_cells {
            weights[i] += v;
        }
        Ok(AnyDistribution::Float(
            JointDistribution::new(space, weights)
                .map_err(|e| Error::Parse(e.to_string()))?,
        ))
    } else {
        let mut weights = vec![Exact::zero(); space.cell_count()];
        for (i, v) in exact_cells {
            weights[i] = weights[i].clone() + v;
        }
        Ok(AnyDistribution::Exact(
            JointDistribution::new(space, weights)
                .map_err(|e| Error::Parse(e.to_string()))?,
        ))
    }
}

fn entries_json<N: Numeric>(
    dist: &JointDistribution<N>,
    encode: impl Fn(&N) -> Value,
) -> Vec<Value> {
    let space = dist.space();
    dist.assignments()
        .filter(|(_, w)| !w.is_zero())
        .map(|(asg, w)| {
            json!({
                "alpha": asg.alpha.to_string(),
                "beta": asg.beta.to_string(),
                "a": space.a_settings()[asg.a].degrees(),
                "b": space.b_settings()[asg.b].degrees(),
                "lambda": space.lambda_values()[asg.lambda],
                "p": encode(w),
            })
        })
        .collect()
}

fn header_json(space: &VariableSpace, entries: Vec<Value>) -> Value {
    json!({
        "a_settings": space.a_settings().iter().map(|a| a.degrees()).collect::<Vec<_>>(),
        "b_settings": space.b_settings().iter().map(|a| a.degrees()).collect::<Vec<_>>(),
        "lambda": space.lambda_values(),
        "entries": entries,
    })
}

pub fn save_exact(dist: &JointDistribution<Exact>) -> String {
    let value = header_json(
        dist.space(),
        entries_json(dist, |w| Value::String(format_exact(w))),
    );
    serde_json::to_string_pretty(&value).expect("json encoding")
}

pub fn save_float(dist: &JointDistribution<f64>) -> String {
    let value = header_json(dist.space(), entries_json(dist, |w| json!(w)));
    serde_json::to_string_pretty(&value).expect("json encoding")
}

pub fn save_distribution(dist: &AnyDistribution) -> String {
    match dist {
        AnyDistribution::Exact(d) => save_exact(d),
        AnyDistribution::Float(d) => save_float(d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructors::h14_violating_example;

    #[test]
    fn exact_round_trip_is_identity() {
        let d = h14_violating_example();
        let text = save_exact(&d);
        match load_distribution(&text).unwrap() {
            AnyDistribution::Exact(back) => assert_eq!(back, d),
            AnyDistribution::Float(_) => panic!("mode lost in round trip"),
        }
    }

    #[test]
    fn float_round_trip_close() {
        let d = h14_violating_example().to_float();
        let text = save_float(&d);
        match load_distribution(&text).unwrap() {
            AnyDistribution::Float(back) => {
                for (asg, w) in d.assignments() {
                    assert!((back.weight(&asg) - w).abs() < 1e-12);
                }
            }
            AnyDistribution::Exact(_) => panic!("mode gained in round trip"),
        }
    }

    #[test]
    fn rejects_mixed_modes() {
        let text = r#"{
            "a_settings": [0], "b_settings": [0], "lambda": ["x"],
            "entries": [
                {"alpha": "+", "beta": "+", "a": 0, "b": 0, "lambda": "x", "p": "1/2"},
                {"alpha": "-", "beta": "-", "a": 0, "b": 0, "lambda": "x", "p": 0.5}
            ]
        }"#;
        assert!(matches!(load_distribution(text), Err(Error::Parse(_))));
    }

    #[test]
    fn parse_errors_carry_context() {
        let err = load_distribution("{").unwrap_err();
        assert!(matches!(&err, Error::Parse(m) if m.contains("line")));
        let err = load_distribution(r#"{"a_settings": [0], "b_settings": [0], "lambda": ["x"]}"#)
            .unwrap_err();
        assert!(matches!(&err, Error::Parse(m) if m.contains("entries")));
        let text = r#"{
            "a_settings": [0], "b_settings": [0], "lambda": ["x"],
            "entries": [{"alpha": "+", "beta": "+", "a": 45, "b": 0, "lambda": "x", "p": 1.0}]
        }"#;
        let err = load_distribution(text).unwrap_err();
        assert!(matches!(&err, Error::Parse(m) if m.contains("entries[0].a")));
    }

    #[test]
    fn unnormalized_rejected() {
        let text = r#"{
            "a_settings": [0], "b_settings": [0], "lambda": ["x"],
            "entries": [{"alpha": "+", "beta": "+", "a": 0, "b": 0, "lambda": "x", "p": "1/3"}]
        }"#;
        assert!(load_distribution(text).is_err());
    }
}
