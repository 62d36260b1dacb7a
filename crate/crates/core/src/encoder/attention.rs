use ndarray::{Array2, ArrayView2, Axis};

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(scores: &mut Array2<f64>) {
    for mut row in scores.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        row.mapv_inplace(|x| (x - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|x| x / sum);
    }
}

/// `softmax(Q Kᵀ / √d_h + M) V` for one head.
pub fn attention(
    q: ArrayView2<'_, f64>,
    k: ArrayView2<'_, f64>,
    v: ArrayView2<'_, f64>,
    mask: Option<&Array2<f64>>,
) -> Array2<f64> {
    attention_with_weights(q, k, v, mask).0
}

/// Attention output together with the row-stochastic weight matrix.
pub(crate) fn attention_with_weights(
    q: ArrayView2<'_, f64>,
    k: ArrayView2<'_, f64>,
    v: ArrayView2<'_, f64>,
    mask: Option<&Array2<f64>>,
) -> (Array2<f64>, Array2<f64>) {
    let scale = (q.ncols() as f64).sqrt();
    let mut scores = q.dot(&k.t());
    scores.mapv_inplace(|x| x / scale);
    if let Some(m) = mask {
        scores += m;
    }
    softmax_rows(&mut scores);
    (scores.dot(&v), scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::mask::MASK_LARGE;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn identical_keys_give_column_mean() {
        let q = array![[1.0, 2.0], [-3.0, 0.5], [0.0, 0.0]];
        let k = array![[0.3, 0.7], [0.3, 0.7], [0.3, 0.7]];
        let v = array![[1.0, 10.0], [2.0, 20.0], [6.0, 60.0]];
        let out = attention(q.view(), k.view(), v.view(), None);
        for row in out.rows() {
            assert_abs_diff_eq!(row[0], 3.0, epsilon = 1e-12);
            assert_abs_diff_eq!(row[1], 30.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn fully_masked_row_copies_own_value() {
        let q = array![[1.0], [2.0], [3.0]];
        let v = array![[5.0], [7.0], [11.0]];
        let mut m = Array2::zeros((3, 3));
        m[[1, 0]] = -MASK_LARGE;
        m[[1, 2]] = -MASK_LARGE;
        let out = attention(q.view(), q.view(), v.view(), Some(&m));
        assert_eq!(out[[1, 0]], 7.0);
    }

    #[test]
    fn two_token_scalar_case() {
        let q = array![[1.0], [0.0]];
        let k = array![[1.0], [0.0]];
        let v = array![[2.0], [4.0]];
        let (out, w) = attention_with_weights(q.view(), k.view(), v.view(), Some(&Array2::zeros((2, 2))));
        // softmax([1, 0]) = [e/(e+1), 1/(e+1)]
        let e = std::f64::consts::E;
        assert_abs_diff_eq!(w[[0, 0]], e / (e + 1.0), epsilon = 1e-12);
        assert_abs_diff_eq!(w[[0, 0]], 0.7311, epsilon = 5e-5);
        assert_abs_diff_eq!(w[[0, 1]], 0.2689, epsilon = 5e-5);
        assert_abs_diff_eq!(out[[0, 0]], 2.0 * e / (e + 1.0) + 4.0 / (e + 1.0), epsilon = 1e-12);
        assert_abs_diff_eq!(out[[0, 0]], 2.5379, epsilon = 5e-5);
        assert_abs_diff_eq!(out[[1, 0]], 3.0, epsilon = 1e-12);
    }
}
