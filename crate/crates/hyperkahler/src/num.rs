//! Fixed-width float rendering for byte-stable reports.

use nalgebra::DMatrix;
use serde::ser::{Serialize, SerializeStruct, Serializer};
use serde_json::value::RawValue;

/// An `f64` serialized with 17 significant digits in exponent form.
///
/// Non-finite values become the strings `"inf"`, `"-inf"` and `"nan"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Num(pub f64);

pub fn render(x: f64) -> String {
    if x.is_nan() {
        "\"nan\"".into()
    } else if x.is_infinite() {
        if x > 0.0 { "\"inf\"" } else { "\"-inf\"" }.into()
    } else {
        // -0.0 and 0.0 must print the same bytes
        let x = if x == 0.0 { 0.0 } else { x };
        format!("{x:.16e}")
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(render(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

impl From<f64> for Num {
    fn from(x: f64) -> Self {
        Num(x)
    }
}

pub fn nums(xs: &[f64]) -> Vec<Num> {
    xs.iter().copied().map(Num).collect()
}

/// Row-major matrix `{rows, cols, data}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat(pub DMatrix<f64>);

impl Serialize for Mat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let m = &self.0;
        let data: Vec<Num> = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| Num(m[(i, j)])))
            .collect();
        let mut st = s.serialize_struct("Mat", 3)?;
        st.serialize_field("rows", &m.nrows())?;
        st.serialize_field("cols", &m.ncols())?;
        st.serialize_field("data", &data)?;
        st.end()
    }
}

pub fn row_major(m: &DMatrix<f64>) -> Vec<Num> {
    (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| Num(m[(i, j)])))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(render(1.0), "1.0000000000000000e0");
        assert_eq!(render(-0.1), "-1.0000000000000001e-1");
        assert_eq!(render(-0.0), render(0.0));
        assert_eq!(serde_json::to_string(&Num(2.5)).unwrap(), "2.5000000000000000e0");
        assert_eq!(serde_json::to_string(&Num(f64::INFINITY)).unwrap(), "\"inf\"");
    }

    #[test]
    fn parses_back_exactly() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -1e-300, f64::MAX] {
            let s = render(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn matrix_is_row_major() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let v: serde_json::Value = serde_json::from_str(&serde_json::to_string(&Mat(m)).unwrap()).unwrap();
        assert_eq!(v["data"][1].as_f64(), Some(2.0));
        assert_eq!(v["rows"], 2);
    }
}
