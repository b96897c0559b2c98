#![allow(dead_code)]

use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use phonecam_core::RawImage;
use phonecam_service::{Service, ServiceConfig};
use tower::ServiceExt;

pub const BOUNDARY: &str = "phonecam-test-boundary";

pub fn encode(img: &RawImage, format: image::ImageFormat) -> Vec<u8> {
    let mut out = Cursor::new(Vec::new());
    img.to_rgb_image().write_to(&mut out, format).unwrap();
    out.into_inner()
}

pub fn jpeg(img: &RawImage) -> Vec<u8> {
    encode(img, image::ImageFormat::Jpeg)
}

pub fn png(img: &RawImage) -> Vec<u8> {
    encode(img, image::ImageFormat::Png)
}

/// A rock-face stand-in: reddish left half, gray right half, one dark pit.
pub fn outcrop(width: u32, height: u32, pit: (u32, u32)) -> RawImage {
    RawImage::from_fn(width, height, |x, y| {
        let (dx, dy) = (x as i64 - pit.0 as i64, y as i64 - pit.1 as i64);
        if dx * dx + dy * dy <= 100 {
            [25, 20, 20]
        } else if x < width / 2 {
            [170, 70, 50]
        } else {
            [125, 120, 115]
        }
    })
}

pub enum Part<'a> {
    File { name: &'a str, filename: &'a str, bytes: &'a [u8] },
    Text { name: &'a str, value: &'a str },
}

pub fn multipart(parts: &[Part]) -> Vec<u8> {
    let mut body = Vec::new();
    for part in parts {
        body.extend_from_slice(format!("--{BOUNDARY}\r\n").as_bytes());
        match part {
            Part::File { name, filename, bytes } => {
                body.extend_from_slice(
                    format!(
                        "Content-Disposition: form-data; name=\"{name}\"; filename=\"{filename}\"\r\n\
                         Content-Type: application/octet-stream\r\n\r\n"
                    )
                    .as_bytes(),
                );
                body.extend_from_slice(bytes);
            }
            Part::Text { name, value } => {
                body.extend_from_slice(
                    format!("Content-Disposition: form-data; name=\"{name}\"\r\n\r\n{value}").as_bytes(),
                );
            }
        }
        body.extend_from_slice(b"\r\n");
    }
    body.extend_from_slice(format!("--{BOUNDARY}--\r\n").as_bytes());
    body
}

pub fn test_config(root: &Path) -> ServiceConfig {
    ServiceConfig {
        inbox_path: root.join("inbox"),
        publish_path: root.join("published"),
        poll_interval: Duration::from_secs(1),
        ..Default::default()
    }
}

pub struct Harness {
    pub dir: tempfile::TempDir,
    pub service: Service,
    pub router: Router,
}

impl Harness {
    pub fn start() -> Self {
        Self::start_with(|_| {})
    }

    pub fn start_with(tweak: impl FnOnce(&mut ServiceConfig)) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut config = test_config(dir.path());
        tweak(&mut config);
        let service = Service::start(config).unwrap();
        let router = service.router();
        Self { dir, service, router }
    }

    pub fn root(&self) -> PathBuf {
        self.dir.path().to_path_buf()
    }

    pub async fn send(&self, req: Request<Body>) -> (StatusCode, Vec<u8>) {
        send(&self.router, req).await
    }

    pub async fn get(&self, uri: &str) -> (StatusCode, Vec<u8>) {
        self.send(Request::get(uri).body(Body::empty()).unwrap()).await
    }

    pub async fn get_json(&self, uri: &str) -> (StatusCode, serde_json::Value) {
        let (status, body) = self.get(uri).await;
        (status, serde_json::from_slice(&body).unwrap_or(serde_json::Value::Null))
    }

    pub async fn upload(&self, parts: &[Part<'_>]) -> (StatusCode, serde_json::Value) {
        let (status, body) = send(&self.router, upload_request(parts)).await;
        (status, serde_json::from_slice(&body).unwrap_or(serde_json::Value::Null))
    }

    /// Uploads `bytes` as `filename` and returns the job id.
    pub async fn submit(&self, filename: &str, bytes: &[u8]) -> String {
        let (status, body) = self
            .upload(&[Part::File { name: "image", filename, bytes }])
            .await;
        assert_eq!(status, StatusCode::ACCEPTED, "{body}");
        body["job_id"].as_str().unwrap().to_string()
    }

    pub fn wait_idle(&self) {
        assert!(
            self.service.store().wait_idle(Duration::from_secs(120)),
            "queue did not drain"
        );
    }
}

pub fn upload_request(parts: &[Part]) -> Request<Body> {
    Request::post("/api/v1/images")
        .header("content-type", format!("multipart/form-data; boundary={BOUNDARY}"))
        .body(Body::from(multipart(parts)))
        .unwrap()
}

pub async fn send(router: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = router.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, body)
}
