use super::SymbolBlock;
use crate::error::{Error, Result};

fn check_alphabet(a: &SymbolBlock, b: &SymbolBlock) -> Result<()> {
    if a.q() != b.q() {
        return Err(Error::invalid(format!(
            "alphabet mismatch: {} vs {}",
            a.q(),
            b.q()
        )));
    }
    Ok(())
}

/// Number of positions at which two equal-length blocks differ.
pub fn hamming(a: &SymbolBlock, b: &SymbolBlock) -> Result<usize> {
    check_alphabet(a, b)?;
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.as_slice()
        .iter()
        .zip(b.as_slice())
        .filter(|(x, y)| x != y)
        .count())
}

/// Edit distance counting insertions, deletions and substitutions.
pub fn levenshtein(a: &SymbolBlock, b: &SymbolBlock) -> Result<usize> {
    check_alphabet(a, b)?;
    let (a, b) = (a.as_slice(), b.as_slice());
    // single-row dynamic programme
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, &x) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &y) in b.iter().enumerate() {
            let above = row[j + 1];
            let cost = usize::from(x != y);
            row[j + 1] = (diag + cost).min(above + 1).min(row[j] + 1);
            diag = above;
        }
    }
    Ok(row[b.len()])
}
