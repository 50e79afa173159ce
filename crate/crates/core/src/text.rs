//! Term normalization used everywhere a condition string is compared.

/// Lowercases, trims and collapses internal whitespace runs to a single space.
pub fn normalize_term(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn collapses_and_lowercases() {
        assert_eq!(
            normalize_term("  Human\tImmunodeficiency \n Virus "),
            "human immunodeficiency virus"
        );
        assert_eq!(normalize_term("   "), "");
    }

    proptest! {
        #[test]
        fn idempotent(s in "\\PC{0,40}") {
            let once = normalize_term(&s);
            prop_assert_eq!(normalize_term(&once), once);
        }
    }
}
