//! Deterministic bag-of-words oracle used by tests and the golden pipeline.
//!
//! Class `c` scores `18^k_c` where `k_c` counts keyword tokens of class `c`
//! in the input, so one class-0 keyword gives `[0.9, 0.05, 0.05]` and no
//! keyword gives the uniform distribution. Four heads of dimension four:
//!
//! | head | attention `A[i][j] ∝` | CLS segment |
//! |------|-----------------------|-------------|
//! | 1 | `1` | noise |
//! | 2 | `1 + [i and j are keywords]` | keyword counts per class |
//! | 3 | `1 + 2·[|i − j| = 1]` | noise |
//! | 4 | hash weight in `[0.5, 1.5)` | noise |
//!
//! The classifier weighs head 2's count entries by 1 and every noise entry
//! by at most 0.1, so classifier-weight selection picks head 2 whenever the
//! predicted class has a keyword present. All arithmetic is integer powers,
//! IEEE division and bit hashing, so outputs are identical on every platform.

use super::{check_parts, EncodeResult, ModelMeta, Oracle, OracleError};

pub const MOCK_HEADS: usize = 4;
pub const MOCK_HEAD_DIM: usize = 4;
const CLASS_BASE: f64 = 18.0;
const MAX_KEYWORD_COUNT: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct MockConfig {
    pub seed: u64,
    /// Keywords per class, matched case-insensitively.
    pub keywords: Vec<Vec<String>>,
    pub label_names: Vec<String>,
}

impl Default for MockConfig {
    fn default() -> Self {
        let kw = |ws: &[&str]| ws.iter().map(|w| w.to_string()).collect();
        MockConfig {
            seed: 0,
            keywords: vec![
                kw(&["good", "same", "outside", "together", "people"]),
                kw(&["tall", "sad", "married", "friends", "probably"]),
                kw(&["not", "no", "nobody", "never", "sleeping"]),
            ],
            label_names: vec!["entailment".into(), "neutral".into(), "contradiction".into()],
        }
    }
}

#[derive(Debug, Clone)]
pub struct MockOracle {
    config: MockConfig,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn hash_str(h: u64, s: &str) -> u64 {
    // FNV-1a folded through splitmix
    let mut f: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        f ^= b as u64;
        f = f.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix(h ^ f)
}

/// Uniform in `[0, 1)` with 53 bits.
fn unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl MockOracle {
    pub fn new(config: MockConfig) -> Self {
        MockOracle { config }
    }

    pub fn config(&self) -> &MockConfig {
        &self.config
    }

    fn classes(&self) -> usize {
        self.config.label_names.len()
    }

    fn keyword_class(&self, token: &str) -> Option<usize> {
        let lower = token.to_lowercase();
        self.config.keywords.iter().position(|ws| ws.iter().any(|w| w.eq_ignore_ascii_case(&lower)))
    }

    fn counts(&self, part1: &[String], part2: &[String]) -> Vec<usize> {
        let mut counts = vec![0usize; self.classes()];
        for t in part1.iter().chain(part2) {
            if let Some(c) = self.keyword_class(t) {
                if c < counts.len() {
                    counts[c] += 1;
                }
            }
        }
        counts
    }

    fn probabilities(&self, counts: &[usize]) -> Vec<f64> {
        let weights: Vec<f64> = counts
            .iter()
            .map(|&k| (0..k.min(MAX_KEYWORD_COUNT)).fold(1.0, |acc, _| acc * CLASS_BASE))
            .collect();
        let total: f64 = weights.iter().sum();
        weights.iter().map(|w| w / total).collect()
    }

    fn input_hash(&self, part1: &[String], part2: &[String]) -> u64 {
        let mut h = splitmix(self.config.seed);
        for t in part1 {
            h = hash_str(h, t);
        }
        h = splitmix(h ^ 0x5052_454d_4953_45);
        for t in part2 {
            h = hash_str(h, t);
        }
        h
    }

    fn normalize(rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        rows.into_iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.into_iter().map(|v| v / s).collect()
            })
            .collect()
    }

    fn attention(&self, tokens: &[&String], input: u64) -> Vec<Vec<Vec<f64>>> {
        let t = tokens.len();
        let kw: Vec<bool> = tokens.iter().map(|w| self.keyword_class(w).is_some()).collect();
        let uniform = vec![vec![1.0; t]; t];
        let keyword = (0..t).map(|i| (0..t).map(|j| if kw[i] && kw[j] { 2.0 } else { 1.0 }).collect()).collect();
        let positional =
            (0..t).map(|i| (0..t).map(|j| if i.abs_diff(j) == 1 { 3.0 } else { 1.0 }).collect()).collect();
        let hashed = (0..t)
            .map(|i| {
                (0..t)
                    .map(|j| 0.5 + unit(splitmix(input ^ splitmix(((i as u64) << 32) | j as u64))))
                    .collect()
            })
            .collect();
        vec![Self::normalize(uniform), Self::normalize(keyword), Self::normalize(positional), Self::normalize(hashed)]
    }

    fn cls(&self, counts: &[usize], input: u64) -> Vec<f64> {
        let mut cls = Vec::with_capacity(MOCK_HEADS * MOCK_HEAD_DIM);
        for head in 0..MOCK_HEADS {
            for i in 0..MOCK_HEAD_DIM {
                if head == 1 {
                    cls.push(counts.get(i).copied().unwrap_or(0) as f64);
                } else {
                    let h = splitmix(input ^ splitmix((head * MOCK_HEAD_DIM + i) as u64 + 1));
                    cls.push(2.0 * unit(h) - 1.0);
                }
            }
        }
        cls
    }

    fn classifier(&self) -> Vec<Vec<f64>> {
        let m = self.classes();
        let base = splitmix(self.config.seed ^ 0x5745_4947_4854);
        (0..MOCK_HEADS * MOCK_HEAD_DIM)
            .map(|row| {
                let (head, i) = (row / MOCK_HEAD_DIM, row % MOCK_HEAD_DIM);
                (0..m)
                    .map(|c| {
                        if head == 1 {
                            if i == c {
                                1.0
                            } else {
                                0.0
                            }
                        } else {
                            0.1 * (2.0 * unit(splitmix(base ^ ((row * m + c) as u64))) - 1.0)
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

impl Oracle for MockOracle {
    fn meta(&self) -> Result<ModelMeta, OracleError> {
        Ok(ModelMeta {
            n: MOCK_HEADS * MOCK_HEAD_DIM,
            a: MOCK_HEADS,
            m: self.classes(),
            classifier: self.classifier(),
            label_names: self.config.label_names.clone(),
        })
    }

    fn predict(&self, part1: &[String], part2: &[String]) -> Result<Vec<f64>, OracleError> {
        check_parts(part1, part2)?;
        Ok(self.probabilities(&self.counts(part1, part2)))
    }

    fn encode(&self, part1: &[String], part2: &[String]) -> Result<EncodeResult, OracleError> {
        check_parts(part1, part2)?;
        let counts = self.counts(part1, part2);
        let probabilities = self.probabilities(&counts);
        let input = self.input_hash(part1, part2);
        let tokens: Vec<&String> = part1.iter().chain(part2).collect();
        Ok(EncodeResult {
            part1: part1.to_vec(),
            part2: part2.to_vec(),
            boundary: part1.len(),
            attention: self.attention(&tokens, input),
            cls: self.cls(&counts, input),
            head_count: MOCK_HEADS,
            predicted: argmax(&probabilities),
            probabilities,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn good_bearing_input() {
        let o = MockOracle::new(MockConfig::default());
        let p = o.predict(&toks("a good day"), &toks("it is")).unwrap();
        let want = [0.9, 0.05, 0.05];
        for (a, b) in p.iter().zip(want) {
            assert!((a - b).abs() < 1e-15, "{p:?}");
        }
    }

    #[test]
    fn keyword_free_is_uniform() {
        let o = MockOracle::new(MockConfig::default());
        let p = o.predict(&toks("a cat"), &toks("a dog")).unwrap();
        assert!(p.iter().all(|&v| v == 1.0 / 3.0));
    }

    #[test]
    fn empty_part_is_protocol_error() {
        let o = MockOracle::new(MockConfig::default());
        let err = o.predict(&[], &toks("x")).unwrap_err();
        assert!(matches!(err, OracleError::Protocol { ref code, .. } if code == "empty_part"));
        assert!(o.encode(&toks("x"), &[]).is_err());
    }

    #[test]
    fn encode_satisfies_invariants_and_is_pure() {
        let o = MockOracle::new(MockConfig { seed: 9, ..MockConfig::default() });
        let (p1, p2) = (toks("Two people are outside"), toks("Nobody is outside ."));
        let r = o.encode(&p1, &p2).unwrap();
        r.validate().unwrap();
        o.meta().unwrap().validate().unwrap();
        assert_eq!(r, o.encode(&p1, &p2).unwrap());
        let other = MockOracle::new(MockConfig { seed: 10, ..MockConfig::default() }).encode(&p1, &p2).unwrap();
        assert_ne!(r.attention[3], other.attention[3]);
        assert_eq!(r.attention[1], other.attention[1]);
    }

    #[test]
    fn planted_keyword_pair_is_max_head2_cross_edge() {
        let o = MockOracle::new(MockConfig::default());
        let (p1, p2) = (toks("the dog is sad"), toks("a tall animal"));
        let r = o.encode(&p1, &p2).unwrap();
        let a = &r.attention[1];
        let b = r.boundary;
        let mut best = (0, 0, f64::MIN);
        for i in 0..r.token_count() {
            for j in 0..r.token_count() {
                if (i < b) != (j < b) && a[i][j] > best.2 {
                    best = (i, j, a[i][j]);
                }
            }
        }
        let pair = (best.0.min(best.1), best.0.max(best.1));
        assert_eq!(pair, (3, b + 1));
    }
}
