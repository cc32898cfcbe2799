use gasmf::io::{header_path_for, open_cube, read_cube, write_cube, DataType, EnviHeader, Interleave, RadianceCube};
use proptest::prelude::*;

fn header(lines: usize, samples: usize, bands: usize, interleave: Interleave) -> EnviHeader {
    let mut h = EnviHeader::new(lines, samples, (0..bands).map(|k| 2000.0 + 5.0 * k as f64).collect()).unwrap();
    h.interleave = interleave;
    h
}

/// Byte offset of element `(line, sample, band)` written out by hand.
fn element(il: Interleave, l: usize, s: usize, b: usize, lines: usize, samples: usize, bands: usize) -> usize {
    match il {
        Interleave::Bip => (l * samples + s) * bands + b,
        Interleave::Bil => (l * bands + b) * samples + s,
        Interleave::Bsq => (b * lines + l) * samples + s,
    }
}

fn interleave() -> impl Strategy<Value = Interleave> {
    prop_oneof![Just(Interleave::Bip), Just(Interleave::Bil), Just(Interleave::Bsq)]
}

proptest! {
    #[test]
    fn decoded_pixels_match_index_arithmetic(
        lines in 1usize..=3,
        samples in 1usize..=4,
        bands in 1usize..=5,
        il in interleave(),
        seed in any::<u32>(),
    ) {
        let n = lines * samples * bands;
        let raw: Vec<f32> = (0..n).map(|k| (k as f32) * 0.5 + seed as f32 * 1e-3).collect();
        let bytes: Vec<u8> = raw.iter().flat_map(|v| v.to_le_bytes()).collect();
        let h = header(lines, samples, bands, il);
        let cube: RadianceCube<f64> = read_cube(&h, &bytes).unwrap();
        for l in 0..lines {
            for s in 0..samples {
                for b in 0..bands {
                    let want = raw[element(il, l, s, b, lines, samples, bands)] as f64;
                    prop_assert_eq!(cube.pixel(l, s)[b], want);
                }
            }
        }
    }

    #[test]
    fn write_read_roundtrip_is_bit_exact(
        lines in 1usize..=3,
        samples in 1usize..=4,
        bands in 1usize..=5,
        il in interleave(),
        big_endian in any::<bool>(),
        values in prop::collection::vec(-1e6f64..1e6, 60),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let mut h = header(lines, samples, bands, il);
        h.data_type = DataType::Float64;
        if big_endian {
            h.byte_order = gasmf::io::ByteOrder::Big;
        }
        let v: Vec<f64> = values.into_iter().take(lines * samples * bands).collect();
        let cube = RadianceCube::from_values(h, v).unwrap();
        let path = dir.path().join("c.img");
        write_cube(&cube, &path).unwrap();
        let back: RadianceCube<f64> = open_cube(&header_path_for(&path)).unwrap();
        prop_assert_eq!(back.header(), cube.header());
        prop_assert_eq!(back.values(), cube.values());
    }
}
