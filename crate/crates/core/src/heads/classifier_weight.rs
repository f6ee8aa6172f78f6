use super::HeadError;

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Per-head scores `Σ_i sign(c_{j,i}) · w_{j,i}` over contiguous segments.
pub fn head_scores(cls: &[f64], w: &[f64], heads: usize) -> Result<Vec<f64>, HeadError> {
    if heads == 0 || cls.len() % heads != 0 {
        return Err(HeadError::Config(format!("cls length {} not divisible by {heads} heads", cls.len())));
    }
    if w.len() != cls.len() {
        return Err(HeadError::Config(format!("weight length {} != cls length {}", w.len(), cls.len())));
    }
    let l = cls.len() / heads;
    Ok(cls.chunks(l).zip(w.chunks(l)).map(|(c, w)| c.iter().zip(w).map(|(&c, &w)| sign(c) * w).sum()).collect())
}

/// 1-based head with the highest score; the lowest index wins ties.
pub fn classifier_weight_head(cls: &[f64], w: &[f64], heads: usize) -> Result<usize, HeadError> {
    let scores = head_scores(cls, w, heads)?;
    let mut best = 0;
    for (j, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = j;
        }
    }
    Ok(best + 1)
}
