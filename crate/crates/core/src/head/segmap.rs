use super::forward::ProbabilityMaps;
use crate::image::RgbImage;

/// Species colors for exported label maps, in registry order. Registries
/// longer than the palette cycle through it.
pub const SPECIES_PALETTE: [[u8; 3]; 9] = [
    [230, 159, 0],
    [86, 180, 233],
    [0, 158, 115],
    [240, 228, 66],
    [0, 114, 178],
    [213, 94, 0],
    [204, 121, 167],
    [120, 200, 60],
    [150, 110, 70],
];
pub const BACKGROUND_LABEL_RGB: [u8; 3] = [0, 0, 0];
pub const IRRELEVANT_LABEL_RGB: [u8; 3] = [128, 128, 128];

/// Hard per-pixel labels. Values `0..S` are species, `S` is background and
/// `S + 1` is irrelevant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentationMap {
    pub width: usize,
    pub height: usize,
    pub species: usize,
    pub labels: Vec<u16>,
}

impl SegmentationMap {
    pub fn background(&self) -> u16 {
        self.species as u16
    }

    pub fn irrelevant(&self) -> u16 {
        self.species as u16 + 1
    }

    pub fn label_color(&self, label: u16) -> [u8; 3] {
        let l = label as usize;
        if l < self.species {
            SPECIES_PALETTE[l % SPECIES_PALETTE.len()]
        } else if l == self.species {
            BACKGROUND_LABEL_RGB
        } else {
            IRRELEVANT_LABEL_RGB
        }
    }

    pub fn to_image(&self) -> RgbImage {
        let mut img = RgbImage::new(self.width, self.height);
        for (i, &l) in self.labels.iter().enumerate() {
            img.put(i % self.width, i / self.width, self.label_color(l));
        }
        img
    }
}

/// A pixel is a plant when `P_bio > 1/2` (equivalently the summed species
/// probability exceeds kappa); it then takes the most probable species.
/// Otherwise it is background or irrelevant, whichever is likelier. Ties go
/// to the lower label.
pub fn segmentation_map(maps: &ProbabilityMaps) -> SegmentationMap {
    let s = maps.species.len();
    let n = maps.width * maps.height;
    let labels = (0..n)
        .map(|i| {
            if maps.bio[i] > 0.5 {
                let mut best = 0;
                for p in 1..s {
                    if maps.species[p][i] > maps.species[best][i] {
                        best = p;
                    }
                }
                best as u16
            } else if maps.bg[i] >= maps.irr[i] {
                s as u16
            } else {
                s as u16 + 1
            }
        })
        .collect();
    SegmentationMap {
        width: maps.width,
        height: maps.height,
        species: s,
        labels,
    }
}
