//! Per-subject accuracies (percent) as printed in the published result
//! tables: MDM, EEG Conformer and EEGNet, each with the all-channel, 21
//! motor-imagery channel and 21 relevance-selected channel configurations.
//! Each triple is `[overall, left fist, right fist]`.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedRow {
    pub id: u32,
    pub chance: f64,
    pub all: [f64; 3],
    pub mi21: [f64; 3],
    pub feat21: [f64; 3],
}

pub const TABLE_MDM: [PublishedRow; 14] = [
    PublishedRow { id: 7, chance: 59.86, all: [83.87, 83.93, 83.78], mi21: [75.27, 71.43, 81.08], feat21: [74.19, 75.00, 72.97] },
    PublishedRow { id: 12, chance: 57.61, all: [73.12, 77.78, 66.67], mi21: [69.89, 74.07, 64.10], feat21: [73.12, 74.07, 71.79] },
    PublishedRow { id: 22, chance: 58.78, all: [73.12, 80.00, 63.16], mi21: [61.29, 63.64, 57.89], feat21: [63.44, 65.45, 60.53] },
    PublishedRow { id: 42, chance: 56.88, all: [78.49, 83.02, 72.50], mi21: [75.27, 79.25, 70.00], feat21: [77.42, 75.47, 80.00] },
    PublishedRow { id: 43, chance: 57.61, all: [68.82, 64.81, 74.36], mi21: [64.52, 59.26, 71.79], feat21: [61.29, 57.41, 66.67] },
    PublishedRow { id: 48, chance: 56.52, all: [77.42, 81.13, 72.50], mi21: [75.27, 79.25, 70.00], feat21: [72.04, 75.47, 67.50] },
    PublishedRow { id: 49, chance: 58.70, all: [72.04, 81.48, 58.97], mi21: [73.12, 74.07, 71.79], feat21: [65.59, 81.48, 43.59] },
    PublishedRow { id: 53, chance: 57.25, all: [74.19, 77.36, 70.00], mi21: [62.37, 58.49, 67.50], feat21: [73.12, 69.81, 77.50] },
    PublishedRow { id: 70, chance: 59.06, all: [69.89, 72.73, 65.79], mi21: [60.22, 52.73, 71.05], feat21: [67.74, 65.45, 71.05] },
    PublishedRow { id: 80, chance: 59.06, all: [70.97, 78.18, 60.53], mi21: [60.22, 65.45, 52.63], feat21: [64.52, 63.64, 65.79] },
    PublishedRow { id: 82, chance: 57.97, all: [70.97, 85.19, 51.28], mi21: [66.67, 77.78, 51.28], feat21: [67.74, 79.63, 51.28] },
    PublishedRow { id: 85, chance: 58.70, all: [70.97, 72.22, 69.23], mi21: [74.19, 75.93, 71.79], feat21: [65.59, 62.96, 69.23] },
    PublishedRow { id: 94, chance: 58.33, all: [77.42, 79.63, 74.36], mi21: [84.95, 90.74, 76.92], feat21: [75.27, 81.48, 66.67] },
    PublishedRow { id: 102, chance: 57.61, all: [69.57, 71.70, 66.67], mi21: [71.74, 73.58, 69.23], feat21: [58.70, 56.60, 61.54] },
];

pub const TABLE_CONFORMER: [PublishedRow; 14] = [
    PublishedRow { id: 7, chance: 59.86, all: [73.12, 69.64, 78.38], mi21: [80.65, 78.57, 83.78], feat21: [60.22, 76.79, 35.14] },
    PublishedRow { id: 12, chance: 57.61, all: [74.19, 75.93, 71.79], mi21: [67.74, 70.37, 64.10], feat21: [75.27, 81.48, 66.67] },
    PublishedRow { id: 22, chance: 58.78, all: [68.82, 67.27, 71.05], mi21: [60.22, 65.45, 52.63], feat21: [70.97, 85.45, 50.00] },
    PublishedRow { id: 42, chance: 56.88, all: [78.49, 83.02, 72.50], mi21: [82.80, 84.91, 80.00], feat21: [67.74, 66.04, 70.00] },
    PublishedRow { id: 43, chance: 57.61, all: [62.37, 72.22, 48.72], mi21: [62.37, 72.22, 48.72], feat21: [63.44, 87.04, 30.77] },
    PublishedRow { id: 48, chance: 56.52, all: [74.19, 81.13, 65.00], mi21: [73.12, 69.81, 77.50], feat21: [67.74, 75.47, 57.50] },
    PublishedRow { id: 49, chance: 58.70, all: [69.89, 81.48, 53.85], mi21: [74.19, 77.78, 69.23], feat21: [73.12, 75.93, 69.23] },
    PublishedRow { id: 53, chance: 57.25, all: [69.89, 77.36, 60.00], mi21: [60.22, 67.92, 50.00], feat21: [75.27, 84.91, 62.50] },
    PublishedRow { id: 70, chance: 59.06, all: [61.29, 85.45, 26.32], mi21: [56.99, 58.18, 55.26], feat21: [59.14, 78.18, 31.58] },
    PublishedRow { id: 80, chance: 59.06, all: [60.22, 70.91, 44.74], mi21: [59.14, 61.82, 55.26], feat21: [56.99, 69.09, 39.47] },
    PublishedRow { id: 82, chance: 57.97, all: [53.76, 62.96, 41.03], mi21: [59.14, 64.81, 51.28], feat21: [60.22, 57.41, 64.10] },
    PublishedRow { id: 85, chance: 58.70, all: [68.82, 70.37, 66.67], mi21: [58.06, 57.41, 58.97], feat21: [55.91, 61.11, 48.72] },
    PublishedRow { id: 94, chance: 58.33, all: [79.57, 92.59, 61.54], mi21: [77.42, 85.19, 66.67], feat21: [68.82, 79.63, 53.85] },
    PublishedRow { id: 102, chance: 57.61, all: [66.30, 58.49, 76.92], mi21: [56.52, 77.36, 28.21], feat21: [58.70, 54.72, 64.10] },
];

pub const TABLE_EEGNET: [PublishedRow; 14] = [
    PublishedRow { id: 7, chance: 59.86, all: [78.49, 83.93, 70.27], mi21: [81.72, 82.14, 81.08], feat21: [66.67, 75.00, 54.05] },
    PublishedRow { id: 12, chance: 57.61, all: [65.59, 61.11, 71.79], mi21: [58.06, 53.70, 64.10], feat21: [62.37, 79.63, 38.46] },
    PublishedRow { id: 22, chance: 58.78, all: [59.14, 63.64, 52.63], mi21: [61.29, 58.18, 65.79], feat21: [56.99, 65.45, 44.74] },
    PublishedRow { id: 42, chance: 56.88, all: [68.82, 69.81, 67.50], mi21: [78.49, 79.25, 77.50], feat21: [56.99, 66.04, 45.00] },
    PublishedRow { id: 43, chance: 57.61, all: [63.44, 64.81, 61.54], mi21: [58.06, 53.70, 64.10], feat21: [59.14, 62.96, 53.85] },
    PublishedRow { id: 48, chance: 56.52, all: [70.97, 75.47, 65.00], mi21: [63.44, 62.26, 65.00], feat21: [64.52, 73.58, 52.50] },
    PublishedRow { id: 49, chance: 58.70, all: [75.27, 77.78, 71.79], mi21: [73.12, 66.67, 82.05], feat21: [73.12, 81.48, 61.54] },
    PublishedRow { id: 53, chance: 57.25, all: [68.82, 71.70, 65.00], mi21: [64.52, 66.04, 62.50], feat21: [65.59, 73.58, 55.00] },
    PublishedRow { id: 70, chance: 59.06, all: [59.14, 56.36, 63.16], mi21: [58.06, 63.64, 50.00], feat21: [61.29, 63.64, 57.89] },
    PublishedRow { id: 80, chance: 59.06, all: [60.22, 63.64, 55.26], mi21: [59.14, 60.00, 57.89], feat21: [51.61, 54.55, 47.37] },
    PublishedRow { id: 82, chance: 57.97, all: [62.37, 72.22, 48.72], mi21: [54.84, 57.41, 51.28], feat21: [63.44, 85.19, 33.33] },
    PublishedRow { id: 85, chance: 58.70, all: [70.97, 70.37, 71.79], mi21: [65.59, 62.96, 69.23], feat21: [63.44, 74.07, 48.72] },
    PublishedRow { id: 94, chance: 58.33, all: [77.42, 87.04, 64.10], mi21: [78.49, 85.19, 69.23], feat21: [62.37, 72.22, 48.72] },
    PublishedRow { id: 102, chance: 57.61, all: [57.61, 56.60, 58.97], mi21: [60.87, 66.04, 53.85], feat21: [59.78, 71.70, 43.59] },
];
/// Printed cohort footers (`mean, sd`) of the overall columns.
pub mod footers {
    pub const MDM_ALL: (f64, f64) = (73.63, 4.26);
    pub const MDM_MI21: (f64, f64) = (69.64, 7.35);
    pub const MDM_FEAT21: (f64, f64) = (68.56, 5.69);
    pub const CONFORMER_ALL: (f64, f64) = (68.64, 7.30);
    pub const EEGNET_ALL: (f64, f64) = (67.02, 7.02);
}

/// Reported two-sided Wilcoxon p-values.
pub mod p_values {
    pub const MDM_ALL_VS_MI21: f64 = 0.0279;
    pub const MDM_ALL_VS_FEAT21: f64 = 0.0014;
    pub const MDM_VS_CONFORMER_ALL: f64 = 0.0029;
    pub const MDM_VS_EEGNET_ALL: f64 = 0.0028;
}

/// Reported accuracy drops in percentage points.
pub mod deltas {
    pub const MDM_ALL_TO_MI21: f64 = 3.99;
    pub const MDM_ALL_TO_FEAT21: f64 = 5.07;
    pub const MDM_OVER_CONFORMER: f64 = 4.99;
    pub const MDM_OVER_EEGNET: f64 = 6.61;
}

pub fn overall(table: &[PublishedRow], pick: impl Fn(&PublishedRow) -> [f64; 3]) -> Vec<f64> {
    table.iter().map(|r| pick(r)[0]).collect()
}
