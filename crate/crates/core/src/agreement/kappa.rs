//! Fleiss' kappa over interaction-type categories.

use thiserror::Error;

use super::matching::MatchGroup;
use crate::dataset::InteractionType;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KappaError {
    #[error("kappa needs at least 2 rated items, got {0}")]
    TooFewItems(usize),
    #[error("kappa needs at least 2 raters per item, got {0}")]
    TooFewRaters(usize),
    #[error("item {item} has {got} ratings, expected {expected}")]
    InconsistentRaters { item: usize, got: usize, expected: usize },
}

/// Fleiss' kappa for a table of per-item category counts.
///
/// Every row must have the same number of ratings. When chance agreement is
/// total (all ratings in one category) observed agreement is total as well
/// and kappa is defined as 1.
pub fn fleiss_kappa(table: &[Vec<usize>]) -> Result<f64, KappaError> {
    if table.len() < 2 {
        return Err(KappaError::TooFewItems(table.len()));
    }
    let raters: usize = table[0].iter().sum();
    if raters < 2 {
        return Err(KappaError::TooFewRaters(raters));
    }
    for (item, row) in table.iter().enumerate() {
        let got: usize = row.iter().sum();
        if got != raters {
            return Err(KappaError::InconsistentRaters { item, got, expected: raters });
        }
    }
    let items = table.len() as f64;
    let n = raters as f64;
    let categories = table.iter().map(Vec::len).max().unwrap_or(0);

    let mut p_bar = 0.0;
    let mut totals = vec![0usize; categories];
    for row in table {
        let sq: usize = row.iter().map(|&c| c * c).sum();
        p_bar += (sq as f64 - n) / (n * (n - 1.0));
        for (j, &c) in row.iter().enumerate() {
            totals[j] += c;
        }
    }
    p_bar /= items;
    let p_e: f64 = totals
        .iter()
        .map(|&t| {
            let p = t as f64 / (items * n);
            p * p
        })
        .sum();

    if totals.iter().filter(|&&t| t > 0).count() <= 1 {
        return Ok(1.0);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// One annotator's rating in a group: the most frequent human type among
/// their members, ties resolved in [`InteractionType::HUMAN`] order.
fn rating(group: &MatchGroup, annotator: &str) -> Option<usize> {
    let mut counts = [0usize; 4];
    for m in group.members.iter().filter(|m| m.annotator == annotator) {
        if let Some(c) = InteractionType::HUMAN.iter().position(|&t| t == m.interaction.kind) {
            counts[c] += 1;
        }
    }
    let best = *counts.iter().max()?;
    (best > 0).then(|| counts.iter().position(|&c| c == best).unwrap())
}

/// Category table (4 human types) over the groups rated by exactly `raters`
/// distinct annotators.
pub fn type_table(groups: &[MatchGroup], raters: usize) -> Vec<Vec<usize>> {
    groups
        .iter()
        .filter(|g| g.annotator_count() == raters)
        .map(|g| {
            let mut row = vec![0usize; InteractionType::HUMAN.len()];
            let annotators: std::collections::BTreeSet<&str> = g.members.iter().map(|m| m.annotator.as_str()).collect();
            for a in annotators {
                if let Some(c) = rating(g, a) {
                    row[c] += 1;
                }
            }
            row
        })
        .collect()
}

pub fn group_kappa(groups: &[MatchGroup], raters: usize) -> Result<f64, KappaError> {
    fleiss_kappa(&type_table(groups, raters))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Syn=0, Ant=1
    #[test]
    fn unanimous_is_one() {
        let t = vec![vec![3, 0, 0, 0], vec![0, 3, 0, 0], vec![0, 0, 0, 3]];
        assert_eq!(fleiss_kappa(&t).unwrap(), 1.0);
    }

    #[test]
    fn single_category_everywhere_is_one() {
        let t = vec![vec![0, 3, 0, 0], vec![0, 3, 0, 0]];
        assert_eq!(fleiss_kappa(&t).unwrap(), 1.0);
    }

    /// Hand-worked: rows (Syn,Syn,Ant), (Ant,Ant,Ant).
    /// P1 = (4+1-3)/6 = 1/3, P2 = 1, P̄ = 2/3; p_syn = 1/3, p_ant = 2/3,
    /// P̄e = 5/9; κ = (2/3 - 5/9) / (4/9) = 1/4.
    #[test]
    fn two_group_hand_worked_value() {
        let t = vec![vec![2, 1, 0, 0], vec![0, 3, 0, 0]];
        assert!((fleiss_kappa(&t).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert_eq!(fleiss_kappa(&[vec![3, 0]]), Err(KappaError::TooFewItems(1)));
        assert_eq!(fleiss_kappa(&[vec![1, 0], vec![1, 0]]), Err(KappaError::TooFewRaters(1)));
        assert_eq!(
            fleiss_kappa(&[vec![3, 0], vec![1, 0]]),
            Err(KappaError::InconsistentRaters { item: 1, got: 1, expected: 3 })
        );
    }

    #[test]
    fn maximal_disagreement_is_negative() {
        // three raters over three categories, all different
        let t = vec![vec![1, 1, 1, 0], vec![1, 1, 1, 0]];
        assert!((fleiss_kappa(&t).unwrap() + 0.5).abs() < 1e-12);
    }
}
