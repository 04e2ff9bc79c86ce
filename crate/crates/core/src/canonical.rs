//! Canonical JSON rendering: object keys in sorted order, floats printed
//! with 12 significant digits (printf `%g` style). Identical values always
//! render to identical bytes, which the CLI relies on for reproducible
//! reports and graph fingerprints.

use serde_json::Value;

/// Formats a finite float with 12 significant digits, `%g` style:
/// fixed notation for moderate exponents, scientific otherwise, trailing
/// zeros trimmed.
///
/// Panics on NaN or infinity; non-finite values must be encoded as strings
/// before reaching the canonical writer.
pub fn fmt_float(x: f64) -> String {
    const SIG: i32 = 12;
    assert!(x.is_finite(), "non-finite float in canonical output");
    if x == 0.0 {
        return "0".to_string();
    }
    let formatted = format!("{:.*e}", (SIG - 1) as usize, x);
    let (mantissa, exp) = formatted
        .split_once('e')
        .expect("exponential format always contains 'e'");
    let exp: i32 = exp.parse().expect("valid exponent");
    if !(-4..SIG).contains(&exp) {
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        if exp < 0 {
            format!("{mantissa}e-{:02}", -exp)
        } else {
            format!("{mantissa}e+{exp:02}")
        }
    } else {
        let decimals = (SIG - 1 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        if fixed.contains('.') {
            fixed
                .trim_end_matches('0')
                .trim_end_matches('.')
                .to_string()
        } else {
            fixed
        }
    }
}

/// Renders a JSON value canonically. `serde_json`'s default map is a
/// `BTreeMap`, so object keys come out sorted; all floats go through
/// [`fmt_float`].
pub fn to_canonical_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, &mut out);
    out
}

fn write_value(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                out.push_str(&fmt_float(n.as_f64().expect("number is i64, u64 or f64")));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serialization is infallible"));
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (key, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(
                    &serde_json::to_string(key).expect("string serialization is infallible"),
                );
                out.push(':');
                write_value(item, out);
            }
            out.push('}');
        }
    }
}
