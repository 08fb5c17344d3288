//! Information virtue, the seven token conditions and their encodings.
//!
//! The virtue is the fixed meaning behind every non-control token: the
//! price will rise by a bounded amount within the session. Tokens T1-T6
//! express that same virtue through a deterministic, probabilistic or
//! quantity-load artifact at a high or low level; T7 is the control
//! condition with no guidance at all.
//!
//! Each token is encoded as a four-component vector
//! `(determinism, stated_probability, item_count, specificity)`. Distances
//! between tokens are measured after dividing `item_count` by a fixed
//! scale, which keeps the distance map linear in the raw encoding.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the seven token conditions, `T1` through `T7`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenId(u8);

impl TokenId {
    pub const COUNT: usize = 7;
    pub const CONTROL: TokenId = TokenId(7);
    pub const ALL: [TokenId; 7] = [TokenId(1), TokenId(2), TokenId(3), TokenId(4), TokenId(5), TokenId(6), TokenId(7)];

    pub const fn new(n: u8) -> Option<TokenId> {
        if n >= 1 && n <= 7 {
            Some(TokenId(n))
        } else {
            None
        }
    }

    pub const fn number(self) -> u8 {
        self.0
    }

    /// Zero-based position, `T1` → 0.
    pub const fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(index: usize) -> Option<TokenId> {
        u8::try_from(index + 1).ok().and_then(TokenId::new)
    }

    pub const fn is_control(self) -> bool {
        self.0 == 7
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown token id {0:?} (expected T1..T7)")]
pub struct UnknownToken(pub String);

impl FromStr for TokenId {
    type Err = UnknownToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        t.strip_prefix('T')
            .or_else(|| t.strip_prefix('t'))
            .and_then(|n| n.parse::<u8>().ok())
            .and_then(TokenId::new)
            .ok_or_else(|| UnknownToken(t.to_string()))
    }
}

impl Serialize for TokenId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TokenId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = <String as Deserialize>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modality {
    Deterministic,
    Probabilistic,
    QuantityLoad,
    Control,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    High,
    Low,
    None,
}

/// The modality × level cell of each token id, in id order.
pub const CELLS: [(Modality, Level); 7] = [
    (Modality::Deterministic, Level::High),
    (Modality::Deterministic, Level::Low),
    (Modality::Probabilistic, Level::High),
    (Modality::Probabilistic, Level::Low),
    (Modality::QuantityLoad, Level::High),
    (Modality::QuantityLoad, Level::Low),
    (Modality::Control, Level::None),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InformationVirtue {
    pub magnitude_low: f64,
    pub magnitude_high: f64,
    pub statement: String,
}

impl Default for InformationVirtue {
    fn default() -> Self {
        InformationVirtue {
            magnitude_low: 0.02,
            magnitude_high: 0.05,
            statement: "stock price for company 'X' will increase today".to_string(),
        }
    }
}

impl InformationVirtue {
    pub fn validate(&self) -> Result<(), TokenError> {
        if !(self.magnitude_low > 0.0 && self.magnitude_low <= self.magnitude_high) {
            return Err(TokenError::BadVirtue { low: self.magnitude_low, high: self.magnitude_high });
        }
        Ok(())
    }

    pub fn contains(&self, drift: f64) -> bool {
        (self.magnitude_low..=self.magnitude_high).contains(&drift)
    }
}

/// Parameters read off a token artifact.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArtifactParams {
    pub determinism: f64,
    pub stated_probability: f64,
    pub item_count: u32,
    pub specificity: f64,
}

impl ArtifactParams {
    pub const ZERO: ArtifactParams =
        ArtifactParams { determinism: 0.0, stated_probability: 0.0, item_count: 0, specificity: 0.0 };
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenTemplate {
    pub modality: Modality,
    pub level: Level,
    /// Artifact text. `{low}`, `{high}` and `{statement}` are replaced from
    /// the virtue.
    pub text: String,
    pub params: ArtifactParams,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TokenEncoding {
    pub determinism: f64,
    pub stated_probability: f64,
    pub item_count: f64,
    pub specificity: f64,
}

impl TokenEncoding {
    pub const ZERO: TokenEncoding =
        TokenEncoding { determinism: 0.0, stated_probability: 0.0, item_count: 0.0, specificity: 0.0 };

    pub fn to_array(self) -> [f64; 4] {
        [self.determinism, self.stated_probability, self.item_count, self.specificity]
    }

    /// The vector used for distances: `item_count` divided by `item_scale`.
    pub fn normalized(self, item_scale: f64) -> [f64; 4] {
        [self.determinism, self.stated_probability, self.item_count / item_scale, self.specificity]
    }

    pub fn scaled(self, c: f64) -> TokenEncoding {
        TokenEncoding {
            determinism: self.determinism * c,
            stated_probability: self.stated_probability * c,
            item_count: self.item_count * c,
            specificity: self.specificity * c,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InformationToken {
    pub id: TokenId,
    pub modality: Modality,
    pub level: Level,
    /// Rendered message shown to the subject; empty for the control.
    pub artifact_text: String,
    pub params: ArtifactParams,
    /// The virtue this token expresses; `None` for the control.
    pub virtue: Option<InformationVirtue>,
    pub encoding: TokenEncoding,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum TokenError {
    #[error("no template for the {0:?}/{1:?} cell")]
    MissingTemplate(Modality, Level),
    #[error("more than one template for the {0:?}/{1:?} cell")]
    DuplicateTemplate(Modality, Level),
    #[error("{0:?}/{1:?} is not a token cell")]
    InvalidCell(Modality, Level),
    #[error("template {cell:?}: {field} = {value} outside [0, 1]")]
    ParamOutOfRange { cell: (Modality, Level), field: &'static str, value: f64 },
    #[error("virtue magnitudes must satisfy 0 < low <= high, got [{low}, {high}]")]
    BadVirtue { low: f64, high: f64 },
}

/// Maps a token's (modality, level, artifact parameters) to its encoding.
/// The control is always the zero vector.
pub fn encode_token(token: &InformationToken) -> TokenEncoding {
    encode(token.modality, &token.params)
}

fn encode(modality: Modality, p: &ArtifactParams) -> TokenEncoding {
    if modality == Modality::Control {
        return TokenEncoding::ZERO;
    }
    TokenEncoding {
        determinism: p.determinism,
        stated_probability: p.stated_probability,
        item_count: p.item_count as f64,
        specificity: p.specificity,
    }
}

fn percent(x: f64) -> String {
    let p = libm::round(x * 1000.0) / 10.0;
    if p == libm::trunc(p) {
        alloc::format!("{}", p as i64)
    } else {
        alloc::format!("{p}")
    }
}

fn render(text: &str, virtue: &InformationVirtue) -> String {
    text.replace("{low}", &percent(virtue.magnitude_low))
        .replace("{high}", &percent(virtue.magnitude_high))
        .replace("{statement}", &virtue.statement)
}

fn check_unit(cell: (Modality, Level), field: &'static str, value: f64) -> Result<(), TokenError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(TokenError::ParamOutOfRange { cell, field, value })
    }
}

/// Builds T1..T7 from one template per cell.
pub fn build_token_set(
    virtue: &InformationVirtue,
    templates: &[TokenTemplate],
) -> Result<Vec<InformationToken>, TokenError> {
    virtue.validate()?;
    for t in templates {
        if !CELLS.contains(&(t.modality, t.level)) {
            return Err(TokenError::InvalidCell(t.modality, t.level));
        }
    }
    let mut tokens = Vec::with_capacity(TokenId::COUNT);
    for (id, &(modality, level)) in TokenId::ALL.iter().zip(CELLS.iter()) {
        let mut matching = templates.iter().filter(|t| t.modality == modality && t.level == level);
        let template = matching.next().ok_or(TokenError::MissingTemplate(modality, level))?;
        if matching.next().is_some() {
            return Err(TokenError::DuplicateTemplate(modality, level));
        }
        let control = modality == Modality::Control;
        let params = if control { ArtifactParams::ZERO } else { template.params };
        let cell = (modality, level);
        check_unit(cell, "determinism", params.determinism)?;
        check_unit(cell, "stated_probability", params.stated_probability)?;
        check_unit(cell, "specificity", params.specificity)?;
        tokens.push(InformationToken {
            id: *id,
            modality,
            level,
            artifact_text: if control { String::new() } else { render(&template.text, virtue) },
            params,
            virtue: if control { None } else { Some(virtue.clone()) },
            encoding: encode(modality, &params),
        });
    }
    Ok(tokens)
}

/// The shipped artifact templates.
pub fn default_templates() -> Vec<TokenTemplate> {
    let t = |modality, level, text: &str, determinism, stated_probability, item_count, specificity| TokenTemplate {
        modality,
        level,
        text: text.to_string(),
        params: ArtifactParams { determinism, stated_probability, item_count, specificity },
    };
    alloc::vec![
        t(
            Modality::Deterministic,
            Level::High,
            "Company X: price WILL rise {low}-{high}% today, confirmed.",
            1.0,
            1.0,
            1,
            1.0,
        ),
        t(Modality::Deterministic, Level::Low, "Company X: price will rise today.", 1.0, 1.0, 1, 0.4),
        t(
            Modality::Probabilistic,
            Level::High,
            "Company X: 90% chance the price rises {low}-{high}% today.",
            0.0,
            0.9,
            1,
            1.0,
        ),
        t(Modality::Probabilistic, Level::Low, "Company X: some chance (~60%) of a rise today.", 0.0, 0.6, 1, 0.4),
        t(
            Modality::QuantityLoad,
            Level::High,
            "Morning notes:\n\
             - Company X opened at $100.00\n\
             - Sector volume was average yesterday\n\
             - Two analysts reiterated neutral ratings on peers\n\
             - Index futures are flat pre-market\n\
             - Company X board meets next month\n\
             - Supplier earnings are due this week\n\
             - {statement} by {low}-{high}%\n\
             - Options open interest is unchanged\n\
             - Currency markets are quiet\n\
             - A competitor announced a product delay\n\
             - Short interest in the sector is stable\n\
             - Treasury yields edged lower overnight",
            1.0,
            1.0,
            12,
            0.6,
        ),
        t(
            Modality::QuantityLoad,
            Level::Low,
            "Morning notes:\n\
             - Company X opened at $100.00\n\
             - {statement} by {low}-{high}%\n\
             - Sector volume was average yesterday\n\
             - Index futures are flat pre-market",
            1.0,
            1.0,
            4,
            0.8,
        ),
        t(Modality::Control, Level::None, "", 0.0, 0.0, 0, 0.0),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistinctnessParams {
    /// Minimum separation required between every pair of non-control tokens.
    pub threshold: f64,
    /// Divisor applied to `item_count` before measuring distances.
    pub item_scale: f64,
}

impl Default for DistinctnessParams {
    fn default() -> Self {
        DistinctnessParams { threshold: 0.1, item_scale: 12.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TokenDistinctnessReport {
    pub ids: Vec<TokenId>,
    /// Symmetric Euclidean distance matrix over normalized encodings.
    pub pairwise_distance: Vec<Vec<f64>>,
    /// Smallest distance between two distinct non-control tokens
    /// (`+inf` when fewer than two exist).
    pub min_offdiagonal: f64,
    pub threshold: f64,
    pub sufficient: bool,
}

fn euclidean(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Pairwise distances and the sufficiency verdict: every pair of
/// non-control tokens must be strictly farther apart than the threshold.
pub fn check_distinctness(tokens: &[InformationToken], params: &DistinctnessParams) -> TokenDistinctnessReport {
    let vecs: Vec<[f64; 4]> = tokens.iter().map(|t| t.encoding.normalized(params.item_scale)).collect();
    let n = tokens.len();
    let mut d = alloc::vec![alloc::vec![0.0; n]; n];
    let mut min = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = euclidean(&vecs[i], &vecs[j]);
            d[i][j] = dist;
            d[j][i] = dist;
            if !tokens[i].id.is_control() && !tokens[j].id.is_control() {
                min = min.min(dist);
            }
        }
    }
    TokenDistinctnessReport {
        ids: tokens.iter().map(|t| t.id).collect(),
        pairwise_distance: d,
        min_offdiagonal: min,
        threshold: params.threshold,
        sufficient: min > params.threshold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn default_set() -> Vec<InformationToken> {
        build_token_set(&InformationVirtue::default(), &default_templates()).unwrap()
    }

    #[test]
    fn token_id_parse_and_display() {
        assert_eq!("T3".parse::<TokenId>().unwrap().to_string(), "T3");
        assert!("T9".parse::<TokenId>().is_err());
        assert!("T0".parse::<TokenId>().is_err());
        assert!("X1".parse::<TokenId>().is_err());
        assert_eq!(TokenId::from_index(6), Some(TokenId::CONTROL));
    }

    #[test]
    fn default_set_has_seven_tokens_one_control() {
        let set = default_set();
        assert_eq!(set.len(), 7);
        assert_eq!(set.iter().filter(|t| t.modality == Modality::Control).count(), 1);
        assert!(set[6].id.is_control());
        assert!(set[6].artifact_text.is_empty());
        assert_eq!(set[6].encoding, TokenEncoding::ZERO);
        assert!(set[..6].iter().all(|t| !t.artifact_text.is_empty()));
    }

    #[test]
    fn grid_is_complete_and_virtue_constant() {
        let set = default_set();
        let cells: Vec<_> = set[..6].iter().map(|t| (t.modality, t.level)).collect();
        assert_eq!(cells, CELLS[..6].to_vec());
        let v = set[0].virtue.clone().unwrap();
        assert!(set[..6].iter().all(|t| t.virtue.as_ref() == Some(&v)));
        assert!(set[6].virtue.is_none());
    }

    #[test]
    fn deterministic_high_corner() {
        let e = default_set()[0].encoding;
        assert_eq!((e.determinism, e.stated_probability), (1.0, 1.0));
        assert_eq!(default_set()[0].artifact_text, "Company X: price WILL rise 2-5% today, confirmed.");
    }

    #[test]
    fn probabilistic_low_reads_template_parameter() {
        let set = default_set();
        let e = encode_token(&set[3]);
        assert_eq!(e.stated_probability, 0.6);
        assert_eq!(e.determinism, 0.0);
        assert_eq!(encode_token(&set[3]), encode_token(&set[3]));
        assert_eq!(encode_token(&set[6]), TokenEncoding::ZERO);
    }

    #[test]
    fn quantity_high_buries_the_virtue() {
        let set = default_set();
        let text = &set[4].artifact_text;
        assert_eq!(text.lines().filter(|l| l.starts_with("- ")).count(), 12);
        assert!(text.contains("will increase today by 2-5%"));
    }

    #[test]
    fn missing_and_duplicate_cells() {
        let mut t = default_templates();
        t.remove(2);
        assert_eq!(
            build_token_set(&InformationVirtue::default(), &t),
            Err(TokenError::MissingTemplate(Modality::Probabilistic, Level::High))
        );
        let mut t = default_templates();
        t.push(t[0].clone());
        assert_eq!(
            build_token_set(&InformationVirtue::default(), &t),
            Err(TokenError::DuplicateTemplate(Modality::Deterministic, Level::High))
        );
        let mut t = default_templates();
        t[1].params.specificity = 1.5;
        assert!(matches!(build_token_set(&InformationVirtue::default(), &t), Err(TokenError::ParamOutOfRange { .. })));
    }

    #[test]
    fn default_set_is_sufficiently_distinct() {
        let set = default_set();
        let zero = check_distinctness(&set, &DistinctnessParams { threshold: 0.0, ..Default::default() });
        assert!(zero.sufficient);
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    assert!(zero.pairwise_distance[i][j] > 0.0);
                }
            }
        }
        let report = check_distinctness(&set, &DistinctnessParams::default());
        assert!(report.sufficient, "min {}", report.min_offdiagonal);
    }

    #[test]
    fn duplicate_tokens_are_not_distinct() {
        let mut t = default_templates();
        t[1].params = t[0].params;
        let set = build_token_set(&InformationVirtue::default(), &t).unwrap();
        let report = check_distinctness(&set, &DistinctnessParams { threshold: 0.0, ..Default::default() });
        assert_eq!(report.pairwise_distance[0][1], 0.0);
        assert!(!report.sufficient);
    }

    fn arb_params() -> impl Strategy<Value = ArtifactParams> {
        (0.0..=1.0f64, 0.0..=1.0f64, 0u32..20, 0.0..=1.0f64).prop_map(|(d, p, n, s)| ArtifactParams {
            determinism: d,
            stated_probability: p,
            item_count: n,
            specificity: s,
        })
    }

    proptest! {
        #[test]
        fn matrix_is_symmetric_with_zero_diagonal(ps in proptest::collection::vec(arb_params(), 6)) {
            let mut t = default_templates();
            for (tpl, p) in t.iter_mut().zip(ps) {
                tpl.params = p;
            }
            let set = build_token_set(&InformationVirtue::default(), &t).unwrap();
            let r = check_distinctness(&set, &DistinctnessParams::default());
            for i in 0..7 {
                prop_assert_eq!(r.pairwise_distance[i][i], 0.0);
                for j in 0..7 {
                    prop_assert_eq!(r.pairwise_distance[i][j], r.pairwise_distance[j][i]);
                }
            }
            prop_assert_eq!(r.sufficient, r.min_offdiagonal > r.threshold);
        }

        #[test]
        fn scaling_scales_distances(c in 1.0f64..10.0, threshold in 0.0f64..0.5) {
            let mut set = default_set();
            let params = DistinctnessParams { threshold, ..Default::default() };
            let before = check_distinctness(&set, &params);
            for t in &mut set {
                t.encoding = t.encoding.scaled(c);
            }
            let after = check_distinctness(&set, &params);
            for i in 0..7 {
                for j in 0..7 {
                    let want = before.pairwise_distance[i][j] * c;
                    prop_assert!((after.pairwise_distance[i][j] - want).abs() <= 1e-12 * want.max(1.0));
                }
            }
            prop_assert!(!before.sufficient || after.sufficient);
        }
    }
}
