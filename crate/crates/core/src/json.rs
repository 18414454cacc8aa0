//! Lossless JSON encoding of exact values: integers within the i64 range
//! serialize as JSON numbers and as decimal strings beyond it; rationals
//! always serialize as "num/den" strings.

use crate::arith::{rat_from_string, rat_to_string, Int, Rat};
use serde_json::Value;

pub fn int_to_json(x: &Int) -> Value {
    match i64::try_from(x) {
        Ok(v) => Value::from(v),
        Err(_) => Value::from(x.to_string()),
    }
}

pub fn int_from_json(v: &Value) -> Option<Int> {
    match v {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Some(Int::from(i))
            } else if let Some(u) = n.as_u64() {
                Some(Int::from(u))
            } else {
                None
            }
        }
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

pub fn rat_to_json(x: &Rat) -> Value {
    Value::from(rat_to_string(x))
}

pub fn rat_from_json(v: &Value) -> Option<Rat> {
    match v {
        Value::String(s) => rat_from_string(s),
        Value::Number(_) => int_from_json(v).map(Rat::from_integer),
        _ => None,
    }
}

pub fn int_vec_to_json(xs: &[Int]) -> Value {
    Value::Array(xs.iter().map(int_to_json).collect())
}

pub fn int_vec_from_json(v: &Value) -> Option<Vec<Int>> {
    v.as_array()?.iter().map(int_from_json).collect()
}

pub fn rat_vec_to_json(xs: &[Rat]) -> Value {
    Value::Array(xs.iter().map(rat_to_json).collect())
}

pub fn rat_vec_from_json(v: &Value) -> Option<Vec<Rat>> {
    v.as_array()?.iter().map(rat_from_json).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, rat};
    use num_traits::One;

    #[test]
    fn big_integers_round_trip_as_strings() {
        let huge: Int = "123456789012345678901234567890".parse().unwrap();
        let v = int_to_json(&huge);
        assert!(v.is_string());
        assert_eq!(int_from_json(&v).unwrap(), huge);
        let small = int(-42);
        let v = int_to_json(&small);
        assert!(v.is_number());
        assert_eq!(int_from_json(&v).unwrap(), small);
    }

    #[test]
    fn rationals_round_trip() {
        let x = rat(-7, 3);
        assert_eq!(rat_from_json(&rat_to_json(&x)).unwrap(), x);
        let one = Rat::one();
        assert_eq!(rat_to_json(&one), serde_json::json!("1"));
    }
}
