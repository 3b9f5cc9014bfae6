use rand::Rng;

use super::{Grammar, PrefixSequence, Token};

#[derive(Clone, Copy)]
enum Kind {
    Op(super::Op),
    Var,
    Const,
}

/// Draws a random arity-valid sequence of at most `max_len` tokens.
///
/// At every position a token kind (each operator, "variable", "constant") is
/// chosen uniformly among the kinds that still allow all open operands to be
/// closed within the remaining length; the index of a variable or constant is
/// then uniform within its kind.
pub fn random_valid_sequence<R: Rng + ?Sized>(rng: &mut R, max_len: usize, grammar: &Grammar) -> PrefixSequence {
    assert!(max_len >= 1, "max_len must be at least 1");
    let mut kinds: Vec<(Kind, usize)> = grammar.operators.iter().map(|&op| (Kind::Op(op), op.arity())).collect();
    kinds.push((Kind::Var, 0));
    if grammar.n_consts > 0 {
        kinds.push((Kind::Const, 0));
    }

    let mut tokens = Vec::with_capacity(max_len);
    let mut open = 1usize;
    let mut feasible = Vec::with_capacity(kinds.len());
    while open > 0 {
        let remaining_after = max_len - tokens.len() - 1;
        feasible.clear();
        feasible.extend(
            kinds
                .iter()
                .filter(|(_, arity)| open + arity - 1 <= remaining_after)
                .map(|(k, _)| *k),
        );
        let kind = feasible[rng.random_range(0..feasible.len())];
        let token = match kind {
            Kind::Op(op) => Token::Op(op),
            Kind::Var => Token::Var(rng.random_range(0..grammar.n_vars)),
            Kind::Const => Token::Const(rng.random_range(0..grammar.n_consts)),
        };
        open = open + token.arity() - 1;
        tokens.push(token);
    }
    PrefixSequence::new(tokens).expect("generator only emits closable prefixes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::validate_prefix;
    use crate::rng::seeded;

    #[test]
    fn length_one_is_a_leaf() {
        let mut rng = seeded(1);
        for _ in 0..200 {
            let s = random_valid_sequence(&mut rng, 1, &Grammar::default());
            assert_eq!(s.len(), 1);
            assert!(matches!(s[0], Token::Var(_) | Token::Const(_)));
        }
    }

    #[test]
    fn validity_closure_and_length_support() {
        let mut rng = seeded(2);
        let mut seen = [0usize; 31];
        for _ in 0..10_000 {
            let s = random_valid_sequence(&mut rng, 30, &Grammar::default());
            assert!(validate_prefix(&s).is_ok());
            seen[s.len()] += 1;
        }
        // every length in 1..=30 reachable in practice; even lengths with
        // only binary/unary/leaf mixes are all attainable
        let covered = (1..=30).filter(|&l| seen[l] > 0).count();
        assert_eq!(covered, 30, "length histogram {seen:?}");
    }
}
