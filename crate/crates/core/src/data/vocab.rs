use super::DataError;

pub const CUISINES: [&str; 10] = [
    "American", "Chinese", "French", "Greek", "Italian", "Indian", "Japanese", "Mexican", "Spanish", "Thai",
];

/// Also the tie-break order of [`reduce_flavor`].
pub const FLAVORS: [&str; 6] = ["Bitter", "Meaty", "Piquant", "Salty", "Sour", "Sweet"];

pub fn cuisine_index(name: &str) -> Option<usize> {
    CUISINES.iter().position(|&c| c == name)
}

pub fn flavor_index(name: &str) -> Option<usize> {
    FLAVORS.iter().position(|&f| f == name)
}

/// Arg-max over `(flavor, score)` pairs. Equal scores resolve to the flavor
/// that comes first in [`FLAVORS`], so the input order never matters.
pub fn reduce_flavor(scores: &[(usize, f64)]) -> Result<usize, DataError> {
    if scores.is_empty() {
        return Err(DataError::EmptyScores);
    }
    let mut best: Option<(usize, f64)> = None;
    for &(f, s) in scores {
        if f >= FLAVORS.len() {
            return Err(DataError::UnknownLabel {
                line: 0,
                kind: "flavor",
                label: f.to_string(),
            });
        }
        if !(0.0..=1.0).contains(&s) {
            return Err(DataError::ScoreRange {
                line: 0,
                flavor: FLAVORS[f].to_string(),
                score: s,
            });
        }
        best = match best {
            Some((bf, bs)) if bs > s || (bs == s && bf < f) => Some((bf, bs)),
            _ => Some((f, s)),
        };
    }
    Ok(best.unwrap().0)
}

/// [`reduce_flavor`] over flavor names.
pub fn reduce_flavor_named(scores: &[(&str, f64)]) -> Result<&'static str, DataError> {
    let indexed = scores
        .iter()
        .map(|&(name, s)| {
            flavor_index(name).map(|f| (f, s)).ok_or(DataError::UnknownLabel {
                line: 0,
                kind: "flavor",
                label: name.to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FLAVORS[reduce_flavor(&indexed)?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reported_example_is_bitter() {
        let scores = [
            ("Sweet", 0.53),
            ("Sour", 0.33),
            ("Salty", 0.16),
            ("Piquant", 0.09),
            ("Bitter", 1.0),
            ("Meaty", 0.43),
        ];
        assert_eq!(reduce_flavor_named(&scores).unwrap(), "Bitter");
    }

    #[test]
    fn single_and_tie() {
        assert_eq!(reduce_flavor_named(&[("Sweet", 0.2)]).unwrap(), "Sweet");
        assert_eq!(reduce_flavor_named(&[("Sour", 0.5), ("Salty", 0.5)]).unwrap(), "Salty");
    }

    #[test]
    fn errors() {
        assert!(matches!(reduce_flavor(&[]), Err(DataError::EmptyScores)));
        assert!(reduce_flavor_named(&[("Umami", 0.5)]).is_err());
        assert!(reduce_flavor_named(&[("Sour", 1.5)]).is_err());
    }

    proptest! {
        #[test]
        fn result_is_an_input_key_and_order_free(
            raw in prop::collection::btree_map(0usize..6, 0u8..=4, 1..=6),
            rot in 0usize..6,
        ) {
            // coarse scores so ties are common
            let scores: Vec<(usize, f64)> = raw.iter().map(|(&f, &s)| (f, s as f64 / 4.0)).collect();
            let a = reduce_flavor(&scores).unwrap();
            prop_assert!(scores.iter().any(|&(f, _)| f == a));
            let mut rotated = scores.clone();
            rotated.rotate_left(rot % scores.len());
            prop_assert_eq!(reduce_flavor(&rotated).unwrap(), a);
            let mut rev = scores.clone();
            rev.reverse();
            prop_assert_eq!(reduce_flavor(&rev).unwrap(), a);
        }
    }
}
