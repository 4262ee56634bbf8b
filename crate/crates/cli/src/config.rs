use num_rational::Ratio;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

/// Overlays the flags that were given on top of the config file. The file may hold
/// the arguments directly or under a key named after the subcommand.
pub fn resolve<T: Serialize + DeserializeOwned>(flags: &T, file: Option<&Value>, name: &str) -> Result<(T, Value), String> {
    let mut merged = match file {
        None => Map::new(),
        Some(Value::Object(top)) => match top.get(name) {
            Some(Value::Object(section)) => section.clone(),
            _ => top.clone(),
        },
        Some(_) => return Err("config file must hold a JSON object".into()),
    };
    let Value::Object(given) = serde_json::to_value(flags).map_err(|e| e.to_string())? else {
        unreachable!("argument structs serialize to objects")
    };
    for (k, v) in given {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    let echo = Value::Object(merged);
    let args = serde_json::from_value(echo.clone()).map_err(|e| format!("config: {e}"))?;
    Ok((args, echo))
}

/// Parses `a/b`, an integer, or a finite decimal such as `0.25`, exactly.
pub fn parse_ratio(s: &str) -> Result<Ratio<i64>, String> {
    let s = s.trim();
    let bad = || format!("bad rational `{s}`");
    if let Some((a, b)) = s.split_once('/') {
        let a: i64 = a.trim().parse().map_err(|_| bad())?;
        let b: i64 = b.trim().parse().map_err(|_| bad())?;
        if b == 0 {
            return Err(format!("zero denominator in `{s}`"));
        }
        return Ok(Ratio::new(a, b));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        let neg = ip.starts_with('-');
        let ip = ip.trim_start_matches('-');
        if fp.len() > 15 || !fp.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let den = 10i64.pow(fp.len() as u32);
        let whole: i64 = if ip.is_empty() { 0 } else { ip.parse().map_err(|_| bad())? };
        let frac: i64 = if fp.is_empty() { 0 } else { fp.parse().map_err(|_| bad())? };
        let num = whole.checked_mul(den).and_then(|w| w.checked_add(frac)).ok_or_else(bad)?;
        return Ok(Ratio::new(if neg { -num } else { num }, den));
    }
    Ok(Ratio::from_integer(s.parse().map_err(|_| bad())?))
}

pub fn ratio_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Nearest fraction with denominator `10^6`.
pub fn f64_to_ratio(x: f64) -> Ratio<i64> {
    Ratio::new((x * 1e6).round() as i64, 1_000_000)
}

pub fn require<T: Clone>(v: &Option<T>, flag: &str) -> Result<T, String> {
    v.clone().ok_or_else(|| format!("missing --{flag}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios_parse_exactly() {
        assert_eq!(parse_ratio("1/4").unwrap(), Ratio::new(1, 4));
        assert_eq!(parse_ratio("0.25").unwrap(), Ratio::new(1, 4));
        assert_eq!(parse_ratio("-0.5").unwrap(), Ratio::new(-1, 2));
        assert_eq!(parse_ratio("3").unwrap(), Ratio::from_integer(3));
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("x").is_err());
    }

    #[derive(Serialize, serde::Deserialize, Default)]
    #[serde(default)]
    struct A {
        n: Option<usize>,
        p: Option<String>,
    }

    #[test]
    fn flags_override_file() {
        let file: Value = serde_json::json!({"demo": {"n": 10, "p": "1/4"}});
        let (a, _) = resolve(&A { n: Some(12), p: None }, Some(&file), "demo").unwrap();
        assert_eq!(a.n, Some(12));
        assert_eq!(a.p.as_deref(), Some("1/4"));
        let flat: Value = serde_json::json!({"n": 9});
        let (a, _) = resolve(&A::default(), Some(&flat), "demo").unwrap();
        assert_eq!(a.n, Some(9));
    }
}
