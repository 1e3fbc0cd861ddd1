use std::path::Path;
use std::sync::Arc;

use partscale::fixtures;
use partscale::io::binary::to_bytes;
use partscale::io::AtlasMeta;
use partscale::mesh::io::write_obj;
use partscale::{Axis, CsdfGrid, ScalingZone, Vec3, ZoneEdit};
use partscale_api::ops;
use partscale_api::wire::DecomposeRequest;
use partscale_api::PipelineConfig;
use partscale_client::{AtlasResolution, Client, ClientError};
use partscale_service::{router, Store};
use reqwest::StatusCode;

fn config() -> PipelineConfig {
    PipelineConfig {
        resolution: 32,
        preview_resolution: 24,
        ..PipelineConfig::default()
    }
}

async fn start(dir: &Path) -> Client {
    let store = Arc::new(Store::open(dir, config()).unwrap());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router(store)).await.unwrap() });
    Client::new(format!("http://{addr}"))
}

fn stretch(axis: Axis, start: f64, end: f64, dest: f64) -> ZoneEdit {
    ZoneEdit::stretch(ScalingZone::new(axis, start, end, dest).unwrap())
}

fn status(e: ClientError) -> (StatusCode, partscale_api::ErrorBody) {
    (e.status().unwrap(), e.body())
}

fn decode_atlas(bundle: &partscale_api::AtlasBundle) -> CsdfGrid {
    let png = ops::atlas_png(bundle).unwrap();
    let meta: AtlasMeta = bundle.meta.clone();
    partscale::io::Atlas::from_png(&png, meta).unwrap().decode().unwrap()
}

/// Zero crossings of the sampled distance along the line `p0 + t·dir`.
fn crossings(g: &CsdfGrid, p0: Vec3, dir: Vec3, len: f64, step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut prev = g.distance_clamped(&p0);
    let mut t = step;
    while t <= len {
        let d = g.distance_clamped(&(p0 + dir * t));
        if (prev < 0.0) != (d < 0.0) {
            out.push(t - step * d / (d - prev));
        }
        prev = d;
        t += step;
    }
    out
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn upload_read_back_and_list() {
    let dir = tempfile::tempdir().unwrap();
    let client = start(dir.path()).await;
    client.health().await.unwrap();
    let g = fixtures::sphere_grid(20);
    let bytes = to_bytes(&g);
    let info = client.upload(bytes.clone(), None).await.unwrap();
    assert_eq!(info.version, 0);
    assert_eq!(info.grid.dims, [20; 3]);
    assert_eq!(info.grid.part_count, 2);
    assert_eq!(info.grid.sha256, ops::sha256_hex(&bytes));
    assert_eq!(client.csdf(&info.id, None).await.unwrap(), bytes);
    let list = client.list().await.unwrap();
    assert_eq!(list.objects.len(), 1);
    assert_eq!(list.objects[0].id, info.id);

    let (code, body) = status(client.info("nope").await.unwrap_err());
    assert_eq!(code, StatusCode::NOT_FOUND);
    assert_eq!(body.code, "not_found");
    let (code, body) = status(client.upload(b"CSDF\x01".to_vec(), None).await.unwrap_err());
    assert_eq!(code, StatusCode::BAD_REQUEST);
    assert_eq!(body.code, "format");
    assert!(body.offset.is_some());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn mesh_upload_is_voxelized_and_decomposed() {
    let dir = tempfile::tempdir().unwrap();
    let client = start(dir.path()).await;
    let mut obj = Vec::new();
    write_obj(&fixtures::two_boxes_mesh(), &mut obj).unwrap();
    let info = client.upload(obj, Some("obj")).await.unwrap();
    assert_eq!(info.grid.dims, [32; 3]);
    assert_eq!(info.grid.part_count, 0);
    let resp = client.decompose(&info.id, &DecomposeRequest::default(), Some(0)).await.unwrap();
    assert_eq!(resp.report.parts.len(), 2);
    assert_eq!(resp.object.version, 1);
    assert_eq!(resp.object.grid.part_ids, vec![0, 1]);
    assert_eq!(client.info(&info.id).await.unwrap().parts.unwrap(), resp.report);

    let bad = DecomposeRequest {
        threshold: Some(5.0),
        ..DecomposeRequest::default()
    };
    let (code, body) = status(client.decompose(&info.id, &bad, None).await.unwrap_err());
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body.field.as_deref(), Some("threshold"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn malformed_zones_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let client = start(dir.path()).await;
    let id = client.upload(to_bytes(&fixtures::sphere_grid(16)), None).await.unwrap().id;
    let path = format!("/objects/{id}/commit");
    for (body, field) in [
        (r#"{"axis":"q","start":0.2,"end":0.4,"dest":0.6}"#, Some("axis")),
        (r#"{"axis":"x","start":0.2,"end":0.4,"dest":0.1}"#, Some("dest")),
        (r#"{"axis":"x","start":0.2,"end":0.4,"dest":0.6,"mode":"tile","repeats":0}"#, Some("repeats")),
        (r#"{"axis":"x","start":0.2,"end":0.4,"dest":0.6,"extra":true}"#, Some("extra")),
        (r#"{"axis":"x","start":0.2,"end":0.4"#, None),
    ] {
        let (code, err) = status(client.post_raw(&path, body.into()).await.unwrap_err());
        assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
        assert_eq!(err.field.as_deref(), field, "{body}: {err:?}");
    }
    let (code, err) = status(client.commit(&id, &stretch(Axis::X, 1.5, 1.7, 1.9), None).await.unwrap_err());
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err.code, "out_of_domain");
    assert_eq!(client.info(&id).await.unwrap().version, 0);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn identity_preview_matches_stored_preview_atlas() {
    let dir = tempfile::tempdir().unwrap();
    let client = start(dir.path()).await;
    let id = client.upload(to_bytes(&fixtures::sphere_grid(48)), None).await.unwrap().id;
    let base = client.atlas(&id, AtlasResolution::Preview).await.unwrap();
    assert_eq!(base.meta.dims, [24; 3]);
    let same = client.preview(&id, &stretch(Axis::Y, 0.3, 0.6, 0.6)).await.unwrap();
    assert_eq!(same, base);
    let tiled = ZoneEdit::tile(ScalingZone::new(Axis::Y, 0.3, 0.6, 0.6).unwrap(), Some(1), Default::default());
    assert_eq!(client.preview(&id, &tiled).await.unwrap().sha256, base.sha256);
    let full = client.atlas(&id, AtlasResolution::Full).await.unwrap();
    assert_eq!(full.meta.dims, [48; 3]);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn preview_agrees_with_commit_at_coarse_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let client = start(dir.path()).await;
    let id = client.upload(to_bytes(&fixtures::sphere_grid(48)), None).await.unwrap().id;
    let edit = stretch(Axis::X, 0.4, 0.6, 0.8);
    let preview = decode_atlas(&client.preview(&id, &edit).await.unwrap());
    client.commit(&id, &edit, Some(0)).await.unwrap();
    let committed = ops::decode_grid(&client.csdf(&id, None).await.unwrap()).unwrap();
    let coarse = committed.resample(preview.dims()).unwrap();
    let h = coarse.voxel_size() as f64;
    assert!((preview.voxel_size() as f64 - h).abs() < 0.1 * h);
    for (p0, dir) in [
        (Vec3::new(0.0, 0.5, 0.5), Vec3::x()),
        (Vec3::new(0.0, 0.6, 0.45), Vec3::x()),
        (Vec3::new(0.7, 0.0, 0.5), Vec3::y()),
    ] {
        let a = crossings(&preview, p0, dir, 1.2, 0.05 * h);
        let b = crossings(&coarse, p0, dir, 1.2, 0.05 * h);
        assert_eq!(a.len(), b.len(), "{a:?} {b:?}");
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= h, "{x} vs {y}");
        }
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn history_replays_across_restarts() {
    let dir = tempfile::tempdir().unwrap();
    let (id, sha, original) = {
        let client = start(dir.path()).await;
        let g = fixtures::sphere_grid(32);
        let id = client.upload(to_bytes(&g), None).await.unwrap().id;
        client.commit(&id, &stretch(Axis::Z, 0.3, 0.5, 0.7), Some(0)).await.unwrap();
        let tile = ZoneEdit::tile(ScalingZone::new(Axis::X, 0.4, 0.6, 0.8).unwrap(), None, Default::default());
        let info = client.commit(&id, &tile, Some(1)).await.unwrap();
        assert_eq!(info.version, 2);
        (id, info.grid.sha256, to_bytes(&g))
    };
    let client = start(dir.path()).await;
    let info = client.info(&id).await.unwrap();
    assert_eq!((info.version, info.grid.sha256.as_str()), (2, sha.as_str()));
    let history = client.history(&id).await.unwrap();
    assert_eq!(history.entries.len(), 2);
    assert_eq!(history.entries[1].sha256, sha);
    let base = client.csdf(&id, Some(0)).await.unwrap();
    assert_eq!(base, original);
    assert_eq!(history.base, ops::sha256_hex(&base));
    let replayed = ops::replay(
        &ops::decode_grid(&base).unwrap(),
        history.entries.iter().map(|e| &e.operation),
        &config(),
    )
    .unwrap();
    assert_eq!(ops::sha256_hex(&ops::encode_grid(&replayed)), sha);
    let (code, err) = status(client.csdf(&id, Some(7)).await.unwrap_err());
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err.field.as_deref(), Some("version"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn racing_commits_let_exactly_one_through() {
    let dir = tempfile::tempdir().unwrap();
    let client = start(dir.path()).await;
    let id = client.upload(to_bytes(&fixtures::sphere_grid(24)), None).await.unwrap().id;
    for round in 0..3 {
        let a = stretch(Axis::X, 0.3, 0.5, 0.6);
        let b = stretch(Axis::Y, 0.3, 0.5, 0.6);
        let (ra, rb) = tokio::join!(client.commit(&id, &a, Some(round)), client.commit(&id, &b, Some(round)));
        let outcomes = [ra.is_ok(), rb.is_ok()];
        assert_eq!(outcomes.iter().filter(|&&ok| ok).count(), 1, "round {round}");
        let err = ra.err().or(rb.err()).unwrap();
        assert_eq!(err.status(), Some(StatusCode::CONFLICT));
        assert_eq!(err.body().code, "conflict");
        assert_eq!(client.info(&id).await.unwrap().version, round + 1);
    }
    // Without a precondition both are applied, one after the other.
    let a = stretch(Axis::Z, 0.3, 0.5, 0.6);
    let (ra, rb) = tokio::join!(client.commit(&id, &a, None), client.commit(&id, &a, None));
    let mut versions = [ra.unwrap().version, rb.unwrap().version];
    versions.sort();
    assert_eq!(versions, [4, 5]);
    assert_eq!(client.history(&id).await.unwrap().entries.len(), 5);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn renders_png_previews() {
    let dir = tempfile::tempdir().unwrap();
    let client = start(dir.path()).await;
    let g = fixtures::sphere_grid(24);
    let id = client.upload(to_bytes(&g), None).await.unwrap().id;
    let png = client.render(&id, 48, 32, false).await.unwrap();
    assert_eq!(png, ops::render_png(&g, 48, 32, false).unwrap());
    let img = image_dims(&png);
    assert_eq!(img, (48, 32));
    let parts = client.render(&id, 48, 32, true).await.unwrap();
    assert_ne!(parts, png);
    let (code, _) = status(client.post_raw("/objects/x/render", Vec::new()).await.unwrap_err());
    assert_eq!(code, StatusCode::METHOD_NOT_ALLOWED);
    let (code, err) = status(client.render(&id, 0, 10, false).await.unwrap_err());
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err.code, "invalid_dims");
}

fn image_dims(png: &[u8]) -> (u32, u32) {
    let w = u32::from_be_bytes(png[16..20].try_into().unwrap());
    let h = u32::from_be_bytes(png[20..24].try_into().unwrap());
    (w, h)
}
