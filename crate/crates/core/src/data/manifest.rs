//! Line-oriented dataset manifest.
//!
//! ```text
//! # provenance: synthetic seed=7 per_class=2
//! images/a.ppm<TAB>Greek<TAB>Bitter=1<TAB>Meaty=0.43<TAB>...<TAB>train
//! ```
//!
//! Fields are tab-separated: image path (relative to the manifest's
//! directory), cuisine, one to six `Flavor=score` pairs and an optional
//! trailing split (`train`, `val` or `test`). Lines starting with `#` are
//! comments; the first `# provenance:` comment is kept.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::vocab::{cuisine_index, flavor_index, reduce_flavor, CUISINES, FLAVORS};
use super::DataError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, DataError> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(DataError::UnknownLabel {
                line: 0,
                kind: "split",
                label: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: PathBuf,
    pub cuisine: usize,
    /// `(flavor index, score)` in file order.
    pub flavor_scores: Vec<(usize, f64)>,
    pub flavor: usize,
    pub split: Option<Split>,
}

impl Sample {
    pub fn new(image: impl Into<PathBuf>, cuisine: usize, flavor_scores: Vec<(usize, f64)>) -> Result<Self, DataError> {
        if cuisine >= CUISINES.len() {
            return Err(DataError::UnknownLabel {
                line: 0,
                kind: "cuisine",
                label: cuisine.to_string(),
            });
        }
        let flavor = reduce_flavor(&flavor_scores)?;
        Ok(Self {
            image: image.into(),
            cuisine,
            flavor_scores,
            flavor,
            split: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetManifest {
    pub samples: Vec<Sample>,
    pub provenance: Option<String>,
    /// Directory that relative image paths resolve against.
    pub root: PathBuf,
}

/// Per-label counts of one subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelCounts {
    pub cuisine: [usize; 10],
    pub flavor: [usize; 6],
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn resolve(&self, sample: &Sample) -> PathBuf {
        if sample.image.is_absolute() {
            sample.image.clone()
        } else {
            self.root.join(&sample.image)
        }
    }

    /// Samples of one split, or all samples for `None`.
    pub fn subset(&self, split: Option<Split>) -> Vec<&Sample> {
        self.samples
            .iter()
            .filter(|s| split.is_none() || s.split == split)
            .collect()
    }

    pub fn label_counts(&self, split: Option<Split>) -> LabelCounts {
        let mut counts = LabelCounts {
            cuisine: [0; 10],
            flavor: [0; 6],
        };
        for s in self.subset(split) {
            counts.cuisine[s.cuisine] += 1;
            counts.flavor[s.flavor] += 1;
        }
        counts
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        if let Some(p) = &self.provenance {
            out.push_str("# provenance: ");
            out.push_str(p);
            out.push('\n');
        }
        for s in &self.samples {
            out.push_str(&s.image.to_string_lossy());
            out.push('\t');
            out.push_str(CUISINES[s.cuisine]);
            for &(f, score) in &s.flavor_scores {
                out.push_str(&format!("\t{}={}", FLAVORS[f], score));
            }
            if let Some(split) = s.split {
                out.push('\t');
                out.push_str(split.as_str());
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), DataError> {
        std::fs::write(path, self.serialize()).map_err(|e| DataError::io(path, e))
    }

    /// Parses manifest text; `root` is where relative image paths live.
    pub fn parse_str(text: &str, root: &Path) -> Result<Self, DataError> {
        let mut manifest = DatasetManifest {
            root: root.to_path_buf(),
            ..Default::default()
        };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim_end_matches('\r');
            if trimmed.trim().is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                if manifest.provenance.is_none() {
                    if let Some(p) = comment.trim().strip_prefix("provenance:") {
                        manifest.provenance = Some(p.trim().to_string());
                    }
                }
                continue;
            }
            manifest.samples.push(parse_record(trimmed, line)?);
        }
        Ok(manifest)
    }
}

fn parse_record(text: &str, line: usize) -> Result<Sample, DataError> {
    let fields: Vec<&str> = text.split('\t').collect();
    let missing = |what: &str| DataError::Parse {
        line,
        message: format!("missing {what}"),
    };
    let image = fields
        .first()
        .filter(|f| !f.is_empty())
        .ok_or_else(|| missing("image path"))?;
    let cuisine_name = fields.get(1).ok_or_else(|| missing("cuisine"))?;
    let cuisine = cuisine_index(cuisine_name).ok_or_else(|| DataError::UnknownLabel {
        line,
        kind: "cuisine",
        label: cuisine_name.to_string(),
    })?;
    let mut scores = Vec::new();
    let mut split = None;
    for (k, field) in fields.iter().enumerate().skip(2) {
        match field.split_once('=') {
            Some((name, value)) => {
                if split.is_some() {
                    return Err(DataError::Parse {
                        line,
                        message: "split must be the last field".into(),
                    });
                }
                let f = flavor_index(name).ok_or_else(|| DataError::UnknownLabel {
                    line,
                    kind: "flavor",
                    label: name.to_string(),
                })?;
                if scores.iter().any(|&(g, _)| g == f) {
                    return Err(DataError::Parse {
                        line,
                        message: format!("duplicate flavor {name}"),
                    });
                }
                let score: f64 = value.parse().map_err(|_| DataError::Parse {
                    line,
                    message: format!("malformed score {value:?} for {name}"),
                })?;
                if !(0.0..=1.0).contains(&score) {
                    return Err(DataError::ScoreRange {
                        line,
                        flavor: name.to_string(),
                        score,
                    });
                }
                scores.push((f, score));
            }
            None if k == fields.len() - 1 => {
                split = Some(field.parse::<Split>().map_err(|_| DataError::UnknownLabel {
                    line,
                    kind: "split",
                    label: field.to_string(),
                })?);
            }
            None => {
                return Err(DataError::Parse {
                    line,
                    message: format!("expected Flavor=score, found {field:?}"),
                })
            }
        }
    }
    if scores.is_empty() {
        return Err(missing("flavor scores"));
    }
    let flavor = reduce_flavor(&scores)?;
    Ok(Sample {
        image: PathBuf::from(image),
        cuisine,
        flavor_scores: scores,
        flavor,
        split,
    })
}

/// Reads a manifest file; image paths resolve against its directory.
pub fn parse_manifest(path: &Path) -> Result<DatasetManifest, DataError> {
    let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    DatasetManifest::parse_str(&text, &root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ROOT: &str = "/data";

    fn parse(text: &str) -> Result<DatasetManifest, DataError> {
        DatasetManifest::parse_str(text, Path::new(ROOT))
    }

    #[test]
    fn empty_text() {
        let m = parse("").unwrap();
        assert!(m.is_empty());
        assert_eq!(m.label_counts(None).cuisine, [0; 10]);
    }

    #[test]
    fn unknown_cuisine_names_line() {
        let err = parse("# c\na.ppm\tGreek\tSour=1\nb.ppm\tKlingon\tSour=1\n").unwrap_err();
        assert!(
            matches!(
                err,
                DataError::UnknownLabel {
                    line: 3,
                    kind: "cuisine",
                    ..
                }
            ),
            "{err}"
        );
        assert!(err.to_string().contains("line 3"));
    }

    #[test]
    fn malformed_and_missing() {
        assert!(matches!(
            parse("a.ppm\tGreek\tSour=x"),
            Err(DataError::Parse { line: 1, .. })
        ));
        assert!(matches!(parse("a.ppm\tGreek"), Err(DataError::Parse { line: 1, .. })));
        assert!(matches!(parse("a.ppm"), Err(DataError::Parse { line: 1, .. })));
        assert!(matches!(
            parse("a.ppm\tGreek\tSour=2"),
            Err(DataError::ScoreRange { line: 1, .. })
        ));
        assert!(matches!(
            parse("a.ppm\tGreek\tSour=1\tnope"),
            Err(DataError::UnknownLabel { kind: "split", .. })
        ));
        assert!(parse("a.ppm\tGreek\tSour=1\tSour=0").is_err());
    }

    #[test]
    fn hundred_record_fixture_matches_hand_tally() {
        // record i: cuisine i % 10, flavor (i / 10) % 6 with score 0.9, Sweet 0.1
        let mut text = String::from("# provenance: fixture\n");
        for i in 0..100 {
            let f = (i / 10) % 6;
            let extra = if f == 5 { "Bitter" } else { "Sweet" };
            text.push_str(&format!(
                "img{i}.ppm\t{}\t{}=0.9\t{extra}=0.1\n",
                CUISINES[i % 10],
                FLAVORS[f]
            ));
        }
        let m = parse(&text).unwrap();
        assert_eq!(m.len(), 100);
        assert_eq!(m.provenance.as_deref(), Some("fixture"));
        let c = m.label_counts(None);
        assert_eq!(c.cuisine, [10; 10]);
        // tens 0..9 -> flavors 0,1,2,3,4,5,0,1,2,3
        assert_eq!(c.flavor, [20, 20, 20, 20, 10, 10]);
        assert_eq!(m.resolve(&m.samples[3]), Path::new("/data/img3.ppm"));
    }

    fn arb_sample() -> impl Strategy<Value = Sample> {
        (
            "[a-z]{1,8}\\.ppm",
            0usize..10,
            prop::collection::btree_map(0usize..6, 0.0f64..=1.0, 1..=6),
            prop::option::of(prop::sample::select(Split::ALL.to_vec())),
        )
            .prop_map(|(name, c, scores, split)| {
                let mut s = Sample::new(name, c, scores.into_iter().collect()).unwrap();
                s.split = split;
                s
            })
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(
            samples in prop::collection::vec(arb_sample(), 0..20),
            provenance in prop::option::of("[a-z]([a-z =]{0,12}[a-z])?"),
        ) {
            let m = DatasetManifest { samples, provenance, root: PathBuf::from(ROOT) };
            let back = parse(&m.serialize()).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
