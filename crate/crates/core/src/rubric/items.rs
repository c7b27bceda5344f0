use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Specificity,
    Novelty,
    Usability,
    Applicability,
}

/// The ten Likert items of the rubric, in card order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subdimension {
    Connectivity,
    Plausibility,
    Uniqueness,
    Novelty,
    Originality,
    Rarity,
    Usability,
    Learnability,
    AddedValue,
    AppropriateAmount,
}

impl Subdimension {
    pub const ALL: [Subdimension; 10] = [
        Subdimension::Connectivity,
        Subdimension::Plausibility,
        Subdimension::Uniqueness,
        Subdimension::Novelty,
        Subdimension::Originality,
        Subdimension::Rarity,
        Subdimension::Usability,
        Subdimension::Learnability,
        Subdimension::AddedValue,
        Subdimension::AppropriateAmount,
    ];

    pub fn dimension(self) -> Dimension {
        use Subdimension::*;
        match self {
            Connectivity | Plausibility | Uniqueness => Dimension::Specificity,
            Novelty | Originality | Rarity => Dimension::Novelty,
            Usability | Learnability => Dimension::Usability,
            AddedValue | AppropriateAmount => Dimension::Applicability,
        }
    }

    /// Agreement statement shown on the card.
    pub fn statement(self) -> &'static str {
        use Subdimension::*;
        match self {
            Connectivity => "There is a clear connection between the AI use and the risk",
            Plausibility => "It is plausible to assume that the risk follows from the AI use",
            Uniqueness => "The risk is present only in this specific AI use",
            Novelty => "The risk is novel \u{2014} I have not heard about it before",
            Originality => "The risk is original \u{2014} it is ingenious, imaginative, or surprising",
            Rarity => "The risk is rare \u{2014} it is not thought about a lot",
            Usability => "I find it easy to engage with or apply",
            Learnability => "I would need to understand many aspects before engaging with it",
            AddedValue => "The risk is useful for policymaking and decision-making needs",
            AppropriateAmount => "The risk contains enough detail to inform concrete policies or decisions",
        }
    }

    /// Column / field name used in CSV and JSONL rating files.
    pub fn key(self) -> &'static str {
        use Subdimension::*;
        match self {
            Connectivity => "connectivity",
            Plausibility => "plausibility",
            Uniqueness => "uniqueness",
            Novelty => "novelty",
            Originality => "originality",
            Rarity => "rarity",
            Usability => "usability",
            Learnability => "learnability",
            AddedValue => "added_value",
            AppropriateAmount => "appropriate_amount",
        }
    }

    /// Short label used in comparison tables.
    pub fn label(self) -> &'static str {
        use Subdimension::*;
        match self {
            Connectivity => "Connected",
            Plausibility => "Plausible",
            Uniqueness => "Specific",
            Novelty => "Novel",
            Originality => "Original",
            Rarity => "Rare",
            Usability => "Easy to Engage",
            Learnability => "Need to Learn",
            AddedValue => "Useful",
            AppropriateAmount => "Detailed",
        }
    }
}

impl FromStr for Subdimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Subdimension::ALL
            .into_iter()
            .find(|d| d.key() == norm)
            .ok_or_else(|| format!("unknown rubric item `{s}`"))
    }
}

/// All thirteen rated quantities on a card. Serialized as its field key so
/// it can be used as a JSON map key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, )]
pub enum RatingDimension {
    Systemic,
    Likelihood,
    Severity,
    Likert(Subdimension),
}

impl RatingDimension {
    pub fn all() -> impl Iterator<Item = RatingDimension> {
        [RatingDimension::Systemic, RatingDimension::Likelihood, RatingDimension::Severity]
            .into_iter()
            .chain(Subdimension::ALL.into_iter().map(RatingDimension::Likert))
    }

    pub fn key(self) -> &'static str {
        match self {
            RatingDimension::Systemic => "systemic",
            RatingDimension::Likelihood => "likelihood",
            RatingDimension::Severity => "severity",
            RatingDimension::Likert(s) => s.key(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RatingDimension::Systemic => "Systemic",
            RatingDimension::Likelihood => "Likelihood",
            RatingDimension::Severity => "Severity",
            RatingDimension::Likert(s) => s.label(),
        }
    }
}

impl fmt::Display for RatingDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for RatingDimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "systemic" => Ok(RatingDimension::Systemic),
            "likelihood" => Ok(RatingDimension::Likelihood),
            "severity" => Ok(RatingDimension::Severity),
            _ => s.parse().map(RatingDimension::Likert),
        }
    }
}

impl Serialize for RatingDimension {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.key())
    }
}

impl<'de> Deserialize<'de> for RatingDimension {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_items_four_dimensions() {
        assert_eq!(Subdimension::ALL.len(), 10);
        assert_eq!(RatingDimension::all().count(), 13);
        let usability: Vec<_> = Subdimension::ALL
            .iter()
            .filter(|s| s.dimension() == Dimension::Usability)
            .map(|s| s.statement())
            .collect();
        assert_eq!(
            usability,
            vec![
                "I find it easy to engage with or apply",
                "I would need to understand many aspects before engaging with it"
            ]
        );
    }

    #[test]
    fn keys_parse_back() {
        for s in Subdimension::ALL {
            assert_eq!(s.key().parse::<Subdimension>().unwrap(), s);
        }
        for d in RatingDimension::all() {
            assert_eq!(d.to_string().parse::<RatingDimension>().unwrap(), d);
            assert_eq!(serde_json::to_string(&d).unwrap(), format!("\"{}\"", d.key()));
        }
    }
}
