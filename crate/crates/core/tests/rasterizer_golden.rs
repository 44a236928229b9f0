use sha2::{Digest, Sha256};
use vlc_demod::channel::ChannelConfig;
use vlc_demod::dataset::{build_dataset, GenerationConfig};
use vlc_demod::modulation::signal_power;
use vlc_demod::rasterizer::visualize;
use vlc_demod::{CarrierConfig, ModulationScheme};

/// `(sha256 of the 784 pixels, foreground count)` of the first frames of the fixture dataset.
const GOLDEN: [(&str, usize); 4] = [
    ("0f6f0344c61f380da21370837371ecef96d7a2a0a821e7a19f4588c8f787771b", 95),
    ("baa300ed6c4fdc23ccee12c0a21da39669f65c8bf2bb343fd34113d419d98383", 100),
    ("ea35853ec149b18d7b1167a2b4f506cec52912754d2cbde4ce69d1bfbd1c9e48", 131),
    ("1ce11bb73860fc69df5f221ca16b612dec854ad1242c9ee10406e947ef47c71f", 106),
];

#[test]
fn pipeline_images_match_fixtures() {
    let scheme = ModulationScheme::Qam16;
    let carrier = CarrierConfig::default();
    let gen = GenerationConfig {
        scheme,
        n: 40,
        carrier,
        channel: ChannelConfig::direct_snr(20.0, signal_power(scheme, 40, &carrier).unwrap(), 4),
        seed: 3,
    };
    let ds = build_dataset(&gen, 64).unwrap();
    for (i, (digest, count)) in GOLDEN.iter().enumerate() {
        let img = visualize(ds.frame(i));
        assert_eq!(img.pixels().len(), 28 * 28);
        assert!(img.pixels().iter().all(|&p| p <= 1));
        assert_eq!(img.foreground_count(), *count, "frame {i}");
        assert_eq!(hex::encode(Sha256::digest(img.pixels())), *digest, "frame {i}");
        assert_eq!(visualize(ds.frame(i)), img);
    }
}

#[test]
fn every_generated_frame_has_foreground() {
    for scheme in ModulationScheme::ALL {
        let carrier = CarrierConfig::default();
        let gen = GenerationConfig {
            scheme,
            n: 40,
            carrier,
            channel: ChannelConfig::direct_snr(15.0, signal_power(scheme, 40, &carrier).unwrap(), 9),
            seed: 8,
        };
        let ds = build_dataset(&gen, scheme.alphabet_size() * 2).unwrap();
        for i in 0..ds.len() {
            assert!(visualize(ds.frame(i)).foreground_count() > 0, "{scheme} frame {i}");
        }
    }
}
