use crate::error::{Error, Result};
use crate::numerics::Assignment;

/// Fraction of rows of `x_gt` that `x` maps to the same column.
pub fn accuracy(x: &Assignment, x_gt: &Assignment) -> Result<f64> {
    if (x.rows(), x.cols()) != (x_gt.rows(), x_gt.cols()) {
        return Err(Error::Shape(format!(
            "{}x{} assignment against a {}x{} ground truth",
            x.rows(),
            x.cols(),
            x_gt.rows(),
            x_gt.cols()
        )));
    }
    if x.rows() == 0 {
        return Err(Error::Empty("assignment"));
    }
    let hits = x
        .col_of_row()
        .iter()
        .zip(x_gt.col_of_row())
        .filter(|(a, b)| a == b)
        .count();
    Ok(hits as f64 / x.rows() as f64)
}

/// `(obj - bound) / obj`; negative when the bound is beaten.
pub fn rel_obj_score(obj: f64, bound: f64) -> Result<f64> {
    if !(obj > 0.0) {
        return Err(Error::Invalid(format!("relative score needs a positive objective, got {obj}")));
    }
    Ok((obj - bound) / obj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_cases() {
        let id = Assignment::identity(4);
        assert_eq!(accuracy(&id, &id).unwrap(), 1.0);
        let shifted = Assignment::new(4, vec![1, 2, 3, 0]).unwrap();
        assert_eq!(accuracy(&shifted, &id).unwrap(), 0.0);
        let half = Assignment::new(4, vec![0, 1, 3, 2]).unwrap();
        assert_eq!(accuracy(&half, &id).unwrap(), 0.5);
        assert!(accuracy(&Assignment::identity(3), &id).is_err());
    }

    #[test]
    fn relative_score_cases() {
        assert!((rel_obj_score(100.0, 90.0).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(rel_obj_score(90.0, 90.0).unwrap(), 0.0);
        assert!(rel_obj_score(80.0, 90.0).unwrap() < 0.0);
        assert!(rel_obj_score(0.0, 1.0).is_err());
    }
}
