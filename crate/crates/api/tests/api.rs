use partscale::fixtures;
use partscale::scale::ModeName;
use partscale::{Axis, ScalingZone, ZoneEdit};
use partscale_api::config::ConfigError;
use partscale_api::ops::{self, InputKind};
use partscale_api::{Operation, PipelineConfig};

#[test]
fn config_defaults_and_overrides() {
    assert_eq!(PipelineConfig::from_toml("").unwrap(), PipelineConfig::default());
    let cfg = PipelineConfig::from_toml("resolution = 64\n[decompose]\nthreshold = 0.1\n").unwrap();
    assert_eq!(cfg.resolution, 64);
    assert_eq!(cfg.decompose.threshold, 0.1);
    assert_eq!(cfg.decompose_options().threshold, 0.1);
    assert_eq!(cfg.preview_resolution, 64);
}

#[test]
fn config_rejects_unknown_keys_and_bad_ranges() {
    assert!(matches!(PipelineConfig::from_toml("resolutoin = 64"), Err(ConfigError::Syntax(_))));
    assert!(matches!(PipelineConfig::from_toml("[decompose]\nbeem = 2"), Err(ConfigError::Syntax(_))));
    for (text, key) in [
        ("resolution = 4", "resolution"),
        ("tau_voxels = 0.0", "tau_voxels"),
        ("output_dims = [1024]", "output_dims"),
        ("[decompose]\nthreshold = 2.0", "decompose.threshold"),
    ] {
        match PipelineConfig::from_toml(text) {
            Err(ConfigError::Range { key: k, .. }) => assert_eq!(k, key),
            other => panic!("{text}: {other:?}"),
        }
    }
}

#[test]
fn config_loads_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pipeline.toml");
    std::fs::write(&path, "blend_width = 5\n").unwrap();
    assert_eq!(PipelineConfig::load(&path).unwrap().blend_width, 5);
    assert!(matches!(PipelineConfig::load(&dir.path().join("missing.toml")), Err(ConfigError::Read { .. })));
}

#[test]
fn edit_parsing_reports_field_paths() {
    let cfg = PipelineConfig {
        blend_width: 5,
        ..PipelineConfig::default()
    };
    let edit = ops::parse_edit(br#"{"axis":"y","start":0.2,"end":0.4,"dest":0.6,"mode":"tile"}"#, &cfg).unwrap();
    assert_eq!(edit.mode, ModeName::Tile);
    assert_eq!(edit.blend_width, 5);

    let cases: [(&[u8], &str); 5] = [
        (br#"{"axis":"w","start":0.2,"end":0.4,"dest":0.6}"#, "axis"),
        (br#"{"axis":"x","start":"a","end":0.4,"dest":0.6}"#, "start"),
        (br#"{"axis":"x","start":0.2,"end":0.4}"#, "dest"),
        (br#"{"axis":"x","start":0.2,"end":0.4,"dest":0.6,"speed":1}"#, "speed"),
        (br#"{"axis":"x","start":0.5,"end":0.4,"dest":0.6}"#, "end"),
    ];
    for (body, field) in cases {
        let err = ops::parse_edit(body, &cfg).unwrap_err();
        assert_eq!(err.code, "invalid_zone", "{err:?}");
        assert_eq!(err.field.as_deref(), Some(field), "{err:?}");
    }
    let err = ops::parse_edit(b"{not json", &cfg).unwrap_err();
    assert_eq!(err.code, "malformed_json");
    assert!(!err.to_line().contains('\n'));
}

#[test]
fn decompose_request_overrides_config() {
    let cfg = PipelineConfig::default();
    assert_eq!(ops::parse_decompose(b"", &cfg).unwrap(), cfg.decompose_options());
    assert_eq!(ops::parse_decompose(br#"{"threshold":0.2}"#, &cfg).unwrap().threshold, 0.2);
    let err = ops::parse_decompose(br#"{"threshold":3}"#, &cfg).unwrap_err();
    assert_eq!(err.field.as_deref(), Some("threshold"));
    let err = ops::parse_decompose(br#"{"depth":3}"#, &cfg).unwrap_err();
    assert_eq!(err.field.as_deref(), Some("depth"));
}

#[test]
fn operations_serialize_with_a_tag() {
    let op = Operation::Scale(ZoneEdit::stretch(ScalingZone::new(Axis::X, 0.2, 0.4, 0.6).unwrap()));
    let json = serde_json::to_value(&op).unwrap();
    assert_eq!(json["op"], "scale");
    assert_eq!(json["axis"], "x");
    assert_eq!(serde_json::from_value::<Operation>(json).unwrap(), op);
    let r = Operation::Resample { dims: [8, 8, 8] };
    assert_eq!(serde_json::to_string(&r).unwrap(), r#"{"op":"resample","dims":[8,8,8]}"#);
}

#[test]
fn input_kinds_are_sniffed() {
    let g = fixtures::sphere_grid(8);
    assert_eq!(InputKind::sniff(&ops::encode_grid(&g)), InputKind::Csdf);
    assert_eq!(InputKind::sniff(b"v 0 0 0\nv 1 0 0\n"), InputKind::Obj);
    let mut stl = vec![0u8; 84];
    stl[0] = 0xff;
    assert_eq!(InputKind::sniff(&stl), InputKind::Stl);
}

#[test]
fn preview_dims_keep_aspect() {
    assert_eq!(ops::preview_dims([128, 64, 32], 64), [64, 32, 16]);
    assert_eq!(ops::preview_dims([32, 32, 32], 64), [32, 32, 32]);
    assert_eq!(ops::preview_dims([200, 3, 100], 50), [50, 2, 25]);
}

#[test]
fn grid_info_and_replay() {
    let cfg = PipelineConfig::default();
    let g = fixtures::sphere_grid(24);
    let info = ops::grid_info(&g, &cfg).unwrap();
    assert_eq!(info.dims, [24; 3]);
    assert_eq!(info.part_ids, vec![0, 1]);
    assert_eq!(info.sha256, ops::sha256_hex(&ops::encode_grid(&g)));
    assert!((info.extent[0] - 1.0).abs() < 1e-6);

    let ops_list = [
        Operation::Scale(ZoneEdit::stretch(ScalingZone::new(Axis::Z, 0.3, 0.6, 0.8).unwrap())),
        Operation::Resample { dims: [16, 16, 20] },
    ];
    let a = ops::replay(&g, &ops_list, &cfg).unwrap();
    let b = ops::replay(&g, &ops_list, &cfg).unwrap();
    assert_eq!(ops::encode_grid(&a), ops::encode_grid(&b));
    assert_eq!(a.dims(), [16, 16, 20]);
}

#[test]
fn renders_are_bounded() {
    let g = fixtures::sphere_grid(16);
    assert!(ops::render_png(&g, 0, 10, false).is_err());
    assert!(ops::render_png(&g, 10, 5000, false).is_err());
    let png = ops::render_png(&g, 16, 16, true).unwrap();
    assert!(png.starts_with(b"\x89PNG"));
}
