use crate::error::Result;
use crate::stats::{estimate_stats, FeatureMap};
use crate::transforms::{apply_transform, build_transform, TransformKind};

use super::{lab_to_srgb, ColorSpace, Image};

/// Color transfer without the final clamp: returns the stylized pixels in
/// sRGB as a `3 x N` feature map, possibly outside `[0, 1]`.
pub fn color_transfer_unclamped(
    content: &Image,
    style: &Image,
    kind: TransformKind,
    alpha: f64,
    space: ColorSpace,
    ridge: f64,
) -> Result<FeatureMap> {
    let fc = content.to_features(space);
    let fs = style.to_features(space);
    let t = build_transform(kind, &estimate_stats(&fc), &estimate_stats(&fs), ridge)?;
    let out = apply_transform(&fc, &t, alpha)?;
    match space {
        ColorSpace::Rgb => Ok(out),
        ColorSpace::Lab => {
            let mut data = out.into_data();
            for mut col in data.columns_mut() {
                let rgb = lab_to_srgb([col[0], col[1], col[2]]);
                for c in 0..3 {
                    col[c] = rgb[c];
                }
            }
            FeatureMap::with_spatial(data, content.height(), content.width())
        }
    }
}

/// Recolors `content` with the color statistics of `style`.
///
/// Both images are moved to `space`, the `kind` transform is fitted on their
/// pixel statistics and applied with blend weight `alpha`, and the result is
/// converted back to sRGB and clamped to `[0, 1]`. `alpha = 0` returns the
/// content unchanged.
pub fn color_transfer(
    content: &Image,
    style: &Image,
    kind: TransformKind,
    alpha: f64,
    space: ColorSpace,
    ridge: f64,
) -> Result<Image> {
    let out = color_transfer_unclamped(content, style, kind, alpha, space, ridge)?;
    if alpha == 0.0 {
        return Ok(content.clone());
    }
    let data = out.data();
    let pixels = (0..data.ncols())
        .map(|i| [data[[0, i]], data[[1, i]], data[[2, i]]])
        .collect();
    Image::new(content.width(), content.height(), pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, DEFAULT_RIDGE};
    use crate::rng;
    use crate::stats::content_loss;
    use crate::transforms::WhiteningMethod;

    /// Base color plus correlated Gaussian noise, small enough never to clip.
    fn noisy(width: usize, height: usize, base: [f64; 3], mix: [[f64; 3]; 3], seed: u64) -> Image {
        let mut r = rng::seeded(seed);
        let z = rng::standard_normal(&mut r, 3, width * height);
        let pixels = (0..width * height)
            .map(|i| {
                [0, 1, 2].map(|c| base[c] + (0..3).map(|k| mix[c][k] * z[[k, i]]).sum::<f64>())
            })
            .collect();
        Image::new(width, height, pixels).unwrap()
    }

    fn red() -> Image {
        noisy(
            32,
            24,
            [0.6, 0.3, 0.3],
            [[0.05, 0.0, 0.0], [0.02, 0.03, 0.0], [0.01, 0.0, 0.02]],
            1,
        )
    }

    fn blue() -> Image {
        noisy(
            20,
            30,
            [0.3, 0.35, 0.6],
            [[0.02, 0.01, 0.0], [0.0, 0.03, 0.01], [0.0, -0.02, 0.05]],
            2,
        )
    }

    const KINDS: [TransformKind; 5] = [
        TransformKind::Ost,
        TransformKind::Wct,
        TransformKind::AdaIn,
        TransformKind::RotatedWct { seed: 3 },
        TransformKind::WhitenOnly(WhiteningMethod::Zca),
    ];

    #[test]
    fn alpha_zero_is_identity() {
        for space in [ColorSpace::Rgb, ColorSpace::Lab] {
            let out = color_transfer(
                &red(),
                &blue(),
                TransformKind::Ost,
                0.0,
                space,
                DEFAULT_RIDGE,
            )
            .unwrap();
            assert_eq!(out, red());
        }
    }

    #[test]
    fn same_style_returns_content() {
        let img = red();
        for kind in KINDS
            .into_iter()
            .filter(|k| !matches!(k, TransformKind::WhitenOnly(_)))
        {
            for alpha in [0.3, 1.0] {
                let out = color_transfer(&img, &img, kind, alpha, ColorSpace::Rgb, 0.0).unwrap();
                let err = out
                    .pixels()
                    .iter()
                    .flatten()
                    .zip(img.pixels().iter().flatten())
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                // Only OST and WCT reduce to the identity; a rotation scrambles
                // channels even when the statistics agree.
                if !matches!(kind, TransformKind::RotatedWct { .. }) {
                    assert!(err <= 1e-9, "{kind:?} alpha {alpha}: {err}");
                }
            }
        }
    }

    #[test]
    fn ost_matches_style_covariance() {
        let out = color_transfer_unclamped(
            &red(),
            &blue(),
            TransformKind::Ost,
            1.0,
            ColorSpace::Rgb,
            DEFAULT_RIDGE,
        )
        .unwrap();
        assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)));
        let got = estimate_stats(&out).cov;
        let want = estimate_stats(&blue().to_features(ColorSpace::Rgb)).cov;
        let rel = linalg::frobenius(&(got.as_array() - want.as_array()).view())
            / linalg::frobenius(&want.view());
        assert!(rel <= 0.05, "relative covariance error {rel}");
    }

    #[test]
    fn lab_path_runs_and_is_deterministic() {
        let a = color_transfer(
            &red(),
            &blue(),
            TransformKind::Ost,
            1.0,
            ColorSpace::Lab,
            DEFAULT_RIDGE,
        )
        .unwrap();
        let b = color_transfer(
            &red(),
            &blue(),
            TransformKind::Ost,
            1.0,
            ColorSpace::Lab,
            DEFAULT_RIDGE,
        )
        .unwrap();
        assert_eq!(a, b);
        let mean_blue: f64 = a.pixels().iter().map(|p| p[2]).sum::<f64>() / a.pixels().len() as f64;
        assert!((mean_blue - 0.6).abs() < 0.05);
    }

    #[test]
    fn single_color_content_is_rescued() {
        let flat = Image::new(4, 4, vec![[0.5, 0.2, 0.1]; 16]).unwrap();
        for kind in KINDS {
            let out =
                color_transfer(&flat, &blue(), kind, 1.0, ColorSpace::Rgb, DEFAULT_RIDGE).unwrap();
            assert_eq!(out.pixels().len(), 16);
        }
        // every pixel collapses onto the style mean color
        let out = color_transfer(
            &flat,
            &blue(),
            TransformKind::Ost,
            1.0,
            ColorSpace::Rgb,
            DEFAULT_RIDGE,
        )
        .unwrap();
        let mean = estimate_stats(&blue().to_features(ColorSpace::Rgb)).mean;
        for c in 0..3 {
            assert!((out.pixels()[0][c] - mean[c]).abs() < 1e-9);
        }
    }

    #[test]
    fn ost_displaces_less_than_rotations() {
        let content = red().to_features(ColorSpace::Rgb);
        let ost = color_transfer_unclamped(
            &red(),
            &blue(),
            TransformKind::Ost,
            1.0,
            ColorSpace::Rgb,
            DEFAULT_RIDGE,
        )
        .unwrap();
        let ost_loss = content_loss(&content, &ost).unwrap();
        for seed in 0..20 {
            let rot = color_transfer_unclamped(
                &red(),
                &blue(),
                TransformKind::RotatedWct { seed },
                1.0,
                ColorSpace::Rgb,
                DEFAULT_RIDGE,
            )
            .unwrap();
            assert!(ost_loss < content_loss(&content, &rot).unwrap());
        }
    }
}
