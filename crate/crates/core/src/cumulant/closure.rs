//! Cumulant closures: express a moment through lower moments by setting its
//! connected part to zero.

use crate::C64;

/// Third-order closure
/// `⟨ABC⟩ ≈ ⟨AB⟩⟨C⟩ + ⟨AC⟩⟨B⟩ + ⟨BC⟩⟨A⟩ − 2⟨A⟩⟨B⟩⟨C⟩`.
///
/// `means = [A, B, C]`, `pairs = [AB, AC, BC]`.
#[inline]
pub fn cumulant_close3(means: [C64; 3], pairs: [C64; 3]) -> C64 {
    let [a, b, c] = means;
    let [ab, ac, bc] = pairs;
    ab * c + ac * b + bc * a - 2.0 * a * b * c
}

/// Fourth-order closure.
///
/// `means = [A, B, C, D]`, `pairs = [AB, AC, AD, BC, BD, CD]`,
/// `triples = [BCD, ACD, ABD, ABC]`.
#[inline]
pub fn cumulant_close4(means: [C64; 4], pairs: [C64; 6], triples: [C64; 4]) -> C64 {
    let [a, b, c, d] = means;
    let [ab, ac, ad, bc, bd, cd] = pairs;
    let [bcd, acd, abd, abc] = triples;
    a * bcd + b * acd + c * abd + d * abc + ab * cd + ac * bd + ad * bc
        - 2.0 * (ab * c * d + ac * b * d + ad * b * c + bc * a * d + bd * a * c + cd * a * b)
        + 6.0 * a * b * c * d
}
