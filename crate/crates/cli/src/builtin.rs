//! The six built-in frequency tables, their pooling pins and the published
//! reference columns used by `reproduce`.

use edm_core::gof::PoolingRule;
use edm_core::inference::CountDataset;
use edm_core::ClassId;
use sha2::{Digest, Sha256};

use crate::dataset::format_dataset;

/// A number as printed in a published table. Blank cells are `""`, and
/// bounds such as `<0.001` have no value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Printed(pub &'static str);

impl Printed {
    pub fn value(&self) -> Option<f64> {
        self.0.parse().ok()
    }

    pub fn decimals(&self) -> usize {
        self.0.split_once('.').map_or(0, |(_, frac)| frac.len())
    }

    /// Half a unit in the last printed place.
    pub fn half_unit(&self) -> f64 {
        0.5 * 10f64.powi(-(self.decimals() as i32))
    }
}

/// One fitted column of a reference table.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceColumn {
    pub label: &'static str,
    /// `None` for competitor models, which are shown but never refitted.
    pub model: Option<(ClassId, u32)>,
    pub counts: &'static [Printed],
    pub loglik: Printed,
    pub chi2: Printed,
    pub df: u32,
    pub p_value: Printed,
    pub rmse: Printed,
    /// RMSE tolerance when tighter than the default.
    pub rmse_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct Builtin {
    pub name: &'static str,
    pub table: u8,
    pub source: &'static str,
    pub counts: &'static [u64],
    pub open_tail: bool,
    pub sha256: &'static str,
    /// Cut index for the chi-square cells per class, in `ABM, LMS, LMNS`
    /// order; `None` pools by minimum expected count.
    pub cuts: [Option<usize>; 3],
    pub zero_fraction: Printed,
    pub dispersion: Printed,
    pub columns: &'static [ReferenceColumn],
}

impl Builtin {
    pub fn dataset(&self) -> CountDataset {
        CountDataset::new(self.name, self.counts.to_vec(), self.open_tail).expect("built-in tables are valid")
    }

    pub fn pooling(&self, class: Option<ClassId>) -> PoolingRule {
        let cut = match class {
            Some(ClassId::Abm) | None => self.cuts[0],
            Some(ClassId::Lms) => self.cuts[1],
            Some(ClassId::Lmns) => self.cuts[2],
        };
        cut.map(PoolingRule::with_cut).unwrap_or_default()
    }

    pub fn digest(&self) -> String {
        dataset_digest(&self.dataset())
    }

    pub fn model_columns(&self) -> impl Iterator<Item = (&ReferenceColumn, ClassId, u32)> {
        self.columns
            .iter()
            .filter_map(|c| c.model.map(|(class, r)| (c, class, r)))
    }
}

pub fn dataset_digest(data: &CountDataset) -> String {
    hex::encode(Sha256::digest(format_dataset(data).as_bytes()))
}

pub fn builtin(name: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == name)
}

pub fn builtin_table(table: u8) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.table == table)
}

macro_rules! p {
    ($($s:literal),* $(,)?) => { &[$(Printed($s)),*] };
}

const fn col(
    label: &'static str,
    model: Option<(ClassId, u32)>,
    counts: &'static [Printed],
    stats: [&'static str; 4],
    df: u32,
) -> ReferenceColumn {
    ReferenceColumn {
        label,
        model,
        counts,
        loglik: Printed(stats[0]),
        chi2: Printed(stats[1]),
        df,
        p_value: Printed(stats[2]),
        rmse: Printed(stats[3]),
        rmse_tol: None,
    }
}

const fn tight(mut c: ReferenceColumn, tol: f64) -> ReferenceColumn {
    c.rmse_tol = Some(tol);
    c
}

use ClassId::{Abm, Lmns, Lms};

pub static BUILTINS: [Builtin; 6] = [
    Builtin {
        name: "set1",
        table: 1,
        source: "Automobile insurance claims, Switzerland 1961 (Gossiaux 1981)",
        counts: &[103704, 14075, 1766, 255, 45, 6, 2],
        open_tail: false,
        sha256: "36e04ccc5fb6382ed48afedd94352655fee187711ba081cc442728257ec6bf35",
        cuts: [Some(5), Some(5), Some(5)],
        zero_fraction: Printed("0.8653"),
        dispersion: Printed("1.156"),
        columns: &[
            col(
                "[1] Poisson-inverse Gaussian (Willmot 1987)",
                None,
                p!["103710.03", "14054.65", "1784.91", "254.49", "40.42", "6.94", "1.26"],
                ["-54609.76", "0.7783", "0.8546", "10.89"],
                3,
            ),
            col(
                "[2] Discrete Lindley (Gomez-Deniz 2011a)",
                None,
                p!["103347.35", "14628.38", "1682.27", "175.79", "17.38", "1.65", "0.15"],
                ["-54659.61", "126.8", "0.0", "252.8"],
                4,
            ),
            col(
                "[3] ABM(r=9)",
                Some((Abm, 9)),
                p!["103719.83", "14016.51", "1823.34", "250.35", "36.38", "5.55", "0.88"],
                ["-54611.59", "4.477", "0.2143", "31.75"],
                3,
            ),
            col(
                "[4] LMS(r=3)",
                Some((Lms, 3)),
                p!["103718.88", "14014.93", "1827.88", "249.38", "35.66", "5.31", "0.82"],
                ["-54612.03", "5.400", "0.0672", "33.34"],
                2,
            ),
            col(
                "[5] LMNS(r=1)",
                Some((Lmns, 1)),
                p!["103707.97", "14060.87", "1781.15", "252.84", "40.91", "7.40", "1.46"],
                ["-54609.75", "0.7432", "0.8630", "8.182"],
                3,
            ),
        ],
    },
    Builtin {
        name: "set2",
        table: 2,
        source: "Automobile insurance claims, Zaire 1974 (Gossiaux 1981)",
        counts: &[3719, 232, 38, 7, 3, 1],
        open_tail: false,
        sha256: "ee23ddb8d7b0d2c23d8b445998e7dbc8d0a2f6e13b5a2fc794aefb5b2cc7e98e",
        cuts: [None, None, Some(4)],
        zero_fraction: Printed("0.9298"),
        dispersion: Printed("1.417"),
        columns: &[
            col(
                "[1] Poisson-inverse Gaussian (Willmot 1987)",
                None,
                p!["3718.58", "234.54", "34.86", "8.32", "2.45", "0.80"],
                ["-1183.52", "0.5438", "0.7619", "1.760"],
                2,
            ),
            col(
                "[2] Gomez-Deniz 2011b",
                None,
                p!["3719.06", "228.65", "41.85", "8.32", "1.68", "0.40"],
                ["-1183.97", "2.235", "0.3147", "2.235"],
                2,
            ),
            col(
                "[3] Geometric discrete Pareto (Bhati 2019)",
                None,
                p!["3718.30", "234.01", "36.09", "8.13", "2.26", "0.72"],
                ["-1183.44", "0.6240", "0.7320", "1.296"],
                2,
            ),
            tight(
                col(
                    "[4] ABM(r=9)",
                    Some((Abm, 9)),
                    p!["3718.98", "232.18", "37.29", "8.36", "2.22", "0.65"],
                    ["-1183.37", "0.4481", "0.7993", "0.7212"],
                    2,
                ),
                0.05,
            ),
            col(
                "[5] LMS(r=5)",
                Some((Lms, 5)),
                p!["3719.65", "231.08", "37.57", "8.48", "2.25", "0.66"],
                ["-1183.36", "0.4555", "0.4997", "0.8470"],
                1,
            ),
            col(
                "[6] LMNS(r=4)",
                Some((Lmns, 4)),
                p!["3718.83", "233.19", "36.30", "8.28", "2.30", "0.72"],
                ["-1183.41", "0.3827", "0.8258", "1.043"],
                2,
            ),
        ],
    },
    Builtin {
        name: "set3",
        table: 3,
        source: "Automobile insurance claims, Germany 1960 (Gossiaux 1981)",
        counts: &[20592, 2651, 297, 41, 7, 0, 1],
        open_tail: false,
        sha256: "b13dac5e430e2cd767098a90c84a21baa2ca047d740f6fa79c82c6197bf09780",
        cuts: [None, None, Some(4)],
        zero_fraction: Printed("0.8729"),
        dispersion: Printed("1.136"),
        columns: &[
            col(
                "[1] Poisson-inverse Gaussian (Willmot 1987)",
                None,
                p!["20595.74", "2638.81", "308.08", "39.68", "5.65", "0.87", "0.14"],
                ["-10221.87", "0.7588", "0.6843", "6.442"],
                2,
            ),
            col(
                "[2] Discrete Lindley (Gomez-Deniz 2011a)",
                None,
                p!["20544.79", "2720.36", "292.41", "28.55", "2.64", "0.24", "0.02"],
                ["-10228.45", "16.38", "<0.001", "32.15"],
                3,
            ),
            col(
                "[3] Strict arcsine (Kokonendji 2004)",
                None,
                p!["20685.83", "2663.08", "171.42", "55.00", "9.62", "3.24", "0.54"],
                ["-10263.11", "98.33", "0.0", "59.68"],
                2,
            ),
            col(
                "[4] ABM(r=9)",
                Some((Abm, 9)),
                p!["20596.75", "2633.91", "313.69", "38.81", "5.04", "0.68", "0.10"],
                ["-10222.51", "1.924", "0.3821", "9.282"],
                2,
            ),
            col(
                "[5] LMS(r=3)",
                Some((Lms, 3)),
                p!["20598.34", "2630.78", "315.12", "38.97", "5.02", "0.67", "0.09"],
                ["-10222.64", "2.146", "0.1430", "10.60"],
                1,
            ),
            col(
                "[6] LMNS(r=1)",
                Some((Lmns, 1)),
                p!["20595.56", "2639.47", "307.61", "39.50", "5.73", "0.93", "0.16"],
                ["-10221.78", "0.6649", "0.7172", "6.136"],
                2,
            ),
        ],
    },
    Builtin {
        name: "set4",
        table: 4,
        source: "European red mites on apple leaves (Bliss 1953)",
        counts: &[70, 38, 17, 10, 9, 3, 2, 1, 0],
        open_tail: false,
        sha256: "cacc40f42e117ac8c1acdf1d2a2bae5691833f774a0d4efbcf78fcec1efab0f5",
        cuts: [None, None, None],
        zero_fraction: Printed("0.4666"),
        dispersion: Printed("1.983"),
        columns: &[
            col(
                "[1] Discrete gamma (Chakraborty 2012)",
                None,
                p!["69.67", "37.49", "20.02", "10.67", "5.69", "3.03", "1.61", "0.86", "0.96"],
                ["-222.44", "2.896", "0.7160", "1.563"],
                5,
            ),
            col(
                "[2] Discrete Rayleigh (Alamatsaz 2016)",
                None,
                p!["71.09", "32.08", "20.76", "12.88", "7.25", "3.60", "1.54", "0.56", ""],
                ["-221.24", "2.868", "0.7204", "2.635"],
                5,
            ),
            col(
                "[3] ABM(r=2)",
                Some((Abm, 2)),
                p!["68.85", "38.90", "20.04", "10.35", "5.43", "2.90", "1.57", "0.86", "0.48"],
                ["-222.75", "3.461", "0.6293", "1.656"],
                5,
            ),
            col(
                "[4] LMS(r=1)",
                Some((Lms, 1)),
                p!["69.25", "38.20", "20.04", "10.50", "5.55", "2.69", "1.59", "0.86", "0.47"],
                ["-222.59", "3.180", "0.5281", "1.578"],
                4,
            ),
            col(
                "[5] LMNS(r=9)",
                Some((Lmns, 9)),
                p!["67.89", "40.51", "20.19", "10.00", "5.11", "2.71", "1.49", "0.84", "0.49"],
                ["-223.29", "4.483", "0.4821", "2.018"],
                5,
            ),
        ],
    },
    Builtin {
        name: "set5",
        table: 5,
        source: "Accidents experienced by machinists (Bliss 1953)",
        counts: &[296, 74, 26, 8, 4, 4, 1, 0, 1],
        open_tail: false,
        sha256: "73f2505f6198d67f603168cddc09f120f9350cd44d891b319885d8472a2080fa",
        cuts: [Some(5), Some(5), Some(5)],
        zero_fraction: Printed("0.7150"),
        dispersion: Printed("2.092"),
        columns: &[
            col(
                "[1] Geometric discrete Pareto (Bhati 2019)",
                None,
                p!["296.60", "72.34", "25.48", "10.47", "4.68", "2.21", "", "2.21", ""],
                ["-381.82", "2.205", "0.820", "1.373"],
                3,
            ),
            col(
                "[2] ABM(r=9)",
                Some((Abm, 9)),
                p!["295.91", "74.37", "24.80", "9.90", "4.43", "2.14", "1.10", "0.58", "0.32"],
                ["-381.80", "0.8985", "0.8258", "1.035"],
                3,
            ),
            col(
                "[3] LMS(r=4)",
                Some((Lms, 4)),
                p!["296.44", "73.61", "24.83", "10.00", "4.50", "2.18", "1.11", "0.59", "0.32"],
                ["-381.78", "0.9239", "0.6300", "1.060"],
                2,
            ),
            col(
                "[4] LMNS(r=3)",
                Some((Lmns, 3)),
                p!["295.30", "76.23", "24.20", "9.37", "4.18", "2.06", "1.09", "0.61", "0.36"],
                ["-381.95", "0.7534", "0.8606", "1.297"],
                3,
            ),
        ],
    },
    Builtin {
        name: "set6",
        table: 6,
        source: "Hospitalizations per family per year (Klugman 1998)",
        counts: &[2659, 244, 19, 2, 0],
        open_tail: true,
        sha256: "bafcc688dc43441196f71d4b26e21cc61a0d9b0306cbf08f18e688308e6fc558",
        cuts: [None, Some(4), None],
        zero_fraction: Printed("0.9094"),
        dispersion: Printed("1.075"),
        columns: &[
            col(
                "[1] Gomez-Deniz 2011b",
                None,
                p!["2659.02", "243.79", "19.52", "1.54", "0.11"],
                ["-969.06", "0.07649", "0.7821", "0.3278"],
                1,
            ),
            col(
                "[2] ABM(r=9)",
                Some((Abm, 9)),
                p!["2659.03", "243.80", "19.47", "1.56", "0.13"],
                ["-969.06", "0.0634", "0.8011", "0.3060"],
                1,
            ),
            col(
                "[3] LMS(r=3)",
                Some((Lms, 3)),
                p!["2659.03", "243.78", "19.50", "1.55", "0.13"],
                ["-969.06", "0.2786", "0.5976", "0.3205"],
                1,
            ),
            tight(
                col(
                    "[4] LMNS(r=1)",
                    Some((Lmns, 1)),
                    p!["2658.95", "244.05", "19.22", "1.61", "0.15"],
                    ["-969.07", "0.0320", "0.8581", "0.2153"],
                    1,
                ),
                0.02,
            ),
        ],
    },
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printed_numbers() {
        assert_eq!(Printed("0.8630").decimals(), 4);
        assert_eq!(Printed("126.8").half_unit(), 0.05);
        assert_eq!(Printed("<0.001").value(), None);
        assert_eq!(Printed("").value(), None);
        assert_eq!(Printed("-969.07").value(), Some(-969.07));
    }

    #[test]
    fn tables_are_consistent() {
        for b in &BUILTINS {
            let data = b.dataset();
            for c in b.columns {
                assert_eq!(c.counts.len(), data.counts().len(), "{} {}", b.name, c.label);
            }
            assert_eq!(b.model_columns().count(), 3, "{}", b.name);
        }
    }

    #[test]
    fn digests_are_pinned() {
        for b in &BUILTINS {
            assert_eq!(b.digest(), b.sha256, "{}", b.name);
        }
    }
}
