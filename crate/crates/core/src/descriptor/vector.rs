/// A unit-length deep-feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VectorError {
    #[error("vector has no components")]
    Empty,
    #[error("vector norm is (numerically) zero")]
    ZeroVector,
    #[error("vector has a non-finite component")]
    NonFinite,
}

const MIN_NORM: f64 = 1e-12;

/// Scales `raw` to unit L2 norm.
pub fn normalize_vector(raw: &[f64]) -> Result<FeatureVector, VectorError> {
    if raw.is_empty() {
        return Err(VectorError::Empty);
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(VectorError::NonFinite);
    }
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < MIN_NORM {
        return Err(VectorError::ZeroVector);
    }
    Ok(FeatureVector(raw.iter().map(|v| v / norm).collect()))
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Normalized mean of several unit vectors of equal dimension.
    pub fn centroid<'a>(vectors: impl IntoIterator<Item = &'a FeatureVector>) -> Option<FeatureVector> {
        let mut acc: Option<Vec<f64>> = None;
        for v in vectors {
            match &mut acc {
                None => acc = Some(v.0.clone()),
                Some(a) if a.len() == v.0.len() => a.iter_mut().zip(&v.0).for_each(|(x, y)| *x += y),
                Some(_) => return None,
            }
        }
        normalize_vector(&acc?).ok()
    }
}
