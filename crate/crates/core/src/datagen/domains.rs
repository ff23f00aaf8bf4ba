//! Closed vocabularies the generator draws from. Query parameters are drawn
//! from the same lists so substituted literals match generated data.

use chrono::NaiveDate;

pub const REGIONS: [&str; 5] = ["AFRICA", "AMERICA", "ASIA", "EUROPE", "MIDDLE EAST"];

/// Nation name and 0-based index into [`REGIONS`]. Nation key = position + 1.
pub const NATIONS: [(&str, usize); 25] = [
    ("ALGERIA", 0),
    ("ARGENTINA", 1),
    ("BRAZIL", 1),
    ("CANADA", 1),
    ("EGYPT", 4),
    ("ETHIOPIA", 0),
    ("FRANCE", 3),
    ("GERMANY", 3),
    ("INDIA", 2),
    ("INDONESIA", 2),
    ("IRAN", 4),
    ("IRAQ", 4),
    ("JAPAN", 2),
    ("JORDAN", 4),
    ("KENYA", 0),
    ("MOROCCO", 0),
    ("MOZAMBIQUE", 0),
    ("PERU", 1),
    ("CHINA", 2),
    ("ROMANIA", 3),
    ("SAUDI ARABIA", 4),
    ("VIETNAM", 2),
    ("RUSSIA", 3),
    ("UNITED KINGDOM", 3),
    ("UNITED STATES", 1),
];

pub const COLORS: [&str; 92] = [
    "almond", "antique", "aquamarine", "azure", "beige", "bisque", "black", "blanched", "blue",
    "blush", "brown", "burlywood", "burnished", "chartreuse", "chiffon", "chocolate", "coral",
    "cornflower", "cornsilk", "cream", "cyan", "dark", "deep", "dim", "dodger", "drab", "firebrick",
    "floral", "forest", "frosted", "gainsboro", "ghost", "goldenrod", "green", "grey", "honeydew",
    "hot", "indian", "ivory", "khaki", "lace", "lavender", "lawn", "lemon", "light", "lime", "linen",
    "magenta", "maroon", "medium", "metallic", "midnight", "mint", "misty", "moccasin", "navajo",
    "navy", "olive", "orange", "orchid", "pale", "papaya", "peach", "peru", "pink", "plum", "powder",
    "puff", "purple", "red", "rose", "rosy", "royal", "saddle", "salmon", "sandy", "seashell",
    "sienna", "sky", "slate", "smoke", "snow", "spring", "steel", "tan", "thistle", "tomato",
    "turquoise", "violet", "wheat", "white", "yellow",
];

pub const TYPE_SIZE: [&str; 6] = ["STANDARD", "SMALL", "MEDIUM", "LARGE", "ECONOMY", "PROMO"];
pub const TYPE_FINISH: [&str; 5] = ["ANODIZED", "BURNISHED", "PLATED", "POLISHED", "BRUSHED"];
pub const TYPE_MATERIAL: [&str; 5] = ["TIN", "NICKEL", "BRASS", "STEEL", "COPPER"];

pub const CONTAINER_SIZE: [&str; 5] = ["SM", "MED", "LG", "JUMBO", "WRAP"];
pub const CONTAINER_KIND: [&str; 8] = ["CASE", "BOX", "PACK", "PKG", "BAG", "JAR", "DRUM", "CAN"];

pub const SEGMENTS: [&str; 5] = ["AUTOMOBILE", "BUILDING", "FURNITURE", "MACHINERY", "HOUSEHOLD"];
pub const PRIORITIES: [&str; 5] = ["1-URGENT", "2-HIGH", "3-MEDIUM", "4-NOT SPECIFIED", "5-LOW"];
pub const SHIP_INSTRUCTIONS: [&str; 4] = ["DELIVER IN PERSON", "COLLECT COD", "NONE", "TAKE BACK RETURN"];
pub const SHIP_MODES: [&str; 7] = ["AIR", "AIR REG", "FOB", "MAIL", "SHIP", "RAIL", "TRUCK"];

/// Words for free-text comment columns.
pub const COMMENT_WORDS: [&str; 48] = [
    "furiously", "carefully", "quickly", "slyly", "blithely", "fluffily", "boldly", "quietly",
    "final", "regular", "special", "pending", "ironic", "express", "bold", "even", "silent",
    "unusual", "careful", "idle", "requests", "deposits", "packages", "accounts", "instructions",
    "theodolites", "foxes", "ideas", "dependencies", "pinto", "beans", "asymptotes", "platelets",
    "excuses", "courts", "dugouts", "sauternes", "warhorses", "sleep", "wake", "haggle", "nag",
    "use", "boost", "cajole", "detect", "integrate", "among",
];

pub fn start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(1992, 1, 1).unwrap()
}

pub fn end_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(1998, 12, 31).unwrap()
}

/// Reference "today" used for return flags and line status.
pub fn current_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(1995, 6, 17).unwrap()
}

/// Latest order date; leaves room for ship (≤121 d) and receipt (≤30 d)
/// offsets so every generated date stays inside the span.
pub fn last_order_date() -> NaiveDate {
    end_date() - chrono::Duration::days(151)
}

pub fn brands() -> Vec<String> {
    (1..=5).flat_map(|m| (1..=5).map(move |n| format!("Brand#{m}{n}"))).collect()
}

pub fn containers() -> Vec<String> {
    CONTAINER_SIZE
        .iter()
        .flat_map(|s| CONTAINER_KIND.iter().map(move |k| format!("{s} {k}")))
        .collect()
}

pub fn part_types() -> Vec<String> {
    let mut v = Vec::with_capacity(150);
    for a in TYPE_SIZE {
        for b in TYPE_FINISH {
            for c in TYPE_MATERIAL {
                v.push(format!("{a} {b} {c}"));
            }
        }
    }
    v
}

/// 1-based nation key of a nation name.
pub fn nation_key(name: &str) -> Option<i64> {
    NATIONS.iter().position(|(n, _)| *n == name).map(|i| i as i64 + 1)
}

pub fn region_of_nation(name: &str) -> Option<&'static str> {
    NATIONS.iter().find(|(n, _)| *n == name).map(|(_, r)| REGIONS[*r])
}

/// Phone country code for a nation key.
pub fn country_code(nation_key: i64) -> i64 {
    nation_key + 10
}

/// Snapshot of every vocabulary, for inspection and membership tests.
#[derive(Debug, Clone)]
pub struct ValueDomains {
    pub regions: Vec<&'static str>,
    pub nations: Vec<&'static str>,
    pub colors: Vec<&'static str>,
    pub brands: Vec<String>,
    pub part_types: Vec<String>,
    pub containers: Vec<String>,
    pub segments: Vec<&'static str>,
    pub priorities: Vec<&'static str>,
    pub ship_instructions: Vec<&'static str>,
    pub ship_modes: Vec<&'static str>,
    pub date_span: (NaiveDate, NaiveDate),
}

pub fn value_domains() -> ValueDomains {
    ValueDomains {
        regions: REGIONS.to_vec(),
        nations: NATIONS.iter().map(|(n, _)| *n).collect(),
        colors: COLORS.to_vec(),
        brands: brands(),
        part_types: part_types(),
        containers: containers(),
        segments: SEGMENTS.to_vec(),
        priorities: PRIORITIES.to_vec(),
        ship_instructions: SHIP_INSTRUCTIONS.to_vec(),
        ship_modes: SHIP_MODES.to_vec(),
        date_span: (start_date(), end_date()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_contents() {
        let d = value_domains();
        assert_eq!(d.brands.len(), 25);
        assert!(d.brands.contains(&"Brand#34".to_string()));
        assert_eq!(d.containers.len(), 40);
        assert!(d.ship_modes.contains(&"AIR REG"));
        assert!(d.segments.contains(&"FURNITURE"));
        assert!(d.ship_instructions.contains(&"DELIVER IN PERSON"));
        assert!(d.regions.contains(&"AFRICA") && d.regions.contains(&"MIDDLE EAST"));
        for n in ["EGYPT", "JORDAN", "ALGERIA", "RUSSIA", "BRAZIL"] {
            assert!(d.nations.contains(&n), "{n}");
        }
        assert!(d.priorities.contains(&"1-URGENT") && d.priorities.contains(&"2-HIGH"));
        assert_eq!(d.date_span, (NaiveDate::from_ymd_opt(1992, 1, 1).unwrap(), NaiveDate::from_ymd_opt(1998, 12, 31).unwrap()));
        assert!(d.part_types.contains(&"PROMO PLATED BRASS".to_string()));
        assert!(d.colors.contains(&"tan") && d.colors.contains(&"royal"));
    }

    #[test]
    fn colors_are_distinct() {
        let mut c = COLORS.to_vec();
        c.sort();
        c.dedup();
        assert_eq!(c.len(), 92);
    }

    #[test]
    fn nation_lookup() {
        assert_eq!(nation_key("ALGERIA"), Some(1));
        assert_eq!(region_of_nation("JORDAN"), Some("MIDDLE EAST"));
        assert_eq!(region_of_nation("ATLANTIS"), None);
    }
}
