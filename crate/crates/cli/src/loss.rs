//! `loss` subcommand: evaluates one loss-zoo functional on tensor inputs.
//!
//! Image inputs are tensors of shape `[H, W]` or `[H, W, C]` holding
//! unit-interval reals. Vector inputs are 1-D; sets of vectors are 2-D
//! `[count, length]`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{anyhow, bail, ensure, Context, Result};
use clap::ValueEnum;
use serde::Deserialize;
use serde_json::{json, Value};
use stainbench_core::losses::{self, DwtMode, FocalParams, GanSide, HaarBands, LossWeights, ScaleScores};
use stainbench_core::{read_tensor, write_tensor, ImageBuffer, Plane, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum LossName {
    Softmax,
    Focal,
    Cosine,
    MaeContent,
    SsimLoss,
    PatchganMs,
    Combine,
    Infonce,
    WecrestQi,
    StyleAdversarial,
    CycleL1,
    Pix2pixGen,
    Pix2pixDis,
    DwtHaar,
    IdwtHaar,
}

fn image(t: &Tensor) -> Result<ImageBuffer<f64>> {
    let (h, w, c) = match t.dims[..] {
        [h, w] => (h, w, 1),
        [h, w, c] => (h, w, c),
        _ => bail!("image tensor must be [H, W] or [H, W, C], got {:?}", t.dims),
    };
    Ok(ImageBuffer::new(w as usize, h as usize, c as usize, t.to_f64())?)
}

fn plane(t: &Tensor) -> Result<Plane> {
    match t.dims[..] {
        [h, w] => Ok(Plane::new(w as usize, h as usize, t.to_f64())?),
        _ => bail!("score map tensor must be [H, W], got {:?}", t.dims),
    }
}

fn vector(t: &Tensor) -> Result<Vec<f64>> {
    ensure!(t.dims.len() == 1, "expected a 1-D tensor, got {:?}", t.dims);
    Ok(t.to_f64())
}

fn rows(t: &Tensor) -> Result<Vec<Vec<f64>>> {
    ensure!(t.dims.len() == 2, "expected a 2-D [count, length] tensor, got {:?}", t.dims);
    Ok(t.to_f64().chunks(t.dims[1] as usize).map(<[f64]>::to_vec).collect())
}

fn param<T: for<'de> Deserialize<'de>>(params: &Value, key: &str) -> Result<T> {
    let v = params.get(key).ok_or_else(|| anyhow!("params: missing {key:?}"))?;
    serde_json::from_value(v.clone()).with_context(|| format!("params: bad {key:?}"))
}

fn param_or<T: for<'de> Deserialize<'de>>(params: &Value, key: &str, default: T) -> Result<T> {
    if params.get(key).is_some() {
        param(params, key)
    } else {
        Ok(default)
    }
}

fn scalar(name: LossName, value: f64) -> Value {
    json!({ "loss": name.to_possible_value().unwrap().get_name(), "value": value })
}

fn flagged(name: LossName, v: losses::LossValue) -> Value {
    json!({ "loss": name.to_possible_value().unwrap().get_name(), "value": v.value, "clamped": v.clamped })
}

/// Evaluates the loss. For the wavelet transforms the result tensor is
/// written to `tensor_out` and a summary is returned.
pub fn run(name: LossName, inputs: &[PathBuf], params: &Value, tensor_out: Option<&PathBuf>) -> Result<Value> {
    let tensors: Vec<Tensor> = inputs
        .iter()
        .map(|p| read_tensor(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<_>>()?;
    let want = |n: usize| -> Result<()> {
        ensure!(tensors.len() == n, "{name:?} takes {n} input tensor(s), got {}", tensors.len());
        Ok(())
    };
    Ok(match name {
        LossName::Softmax => {
            want(1)?;
            let p = losses::softmax_probs(&vector(&tensors[0])?)?;
            json!({ "loss": "softmax", "probs": p })
        }
        LossName::Focal => {
            want(1)?;
            let fp = FocalParams { alpha: param(params, "alpha")?, gamma: param(params, "gamma")? };
            scalar(name, losses::focal_loss(&vector(&tensors[0])?, param(params, "target")?, &fp)?)
        }
        LossName::Cosine => {
            want(2)?;
            scalar(name, losses::cosine_sim_loss(&vector(&tensors[0])?, &vector(&tensors[1])?)?)
        }
        LossName::MaeContent => {
            want(4)?;
            let im: Vec<_> = tensors.iter().map(image).collect::<Result<_>>()?;
            scalar(name, losses::mae_content(&im[0], &im[1], &im[2], &im[3])?)
        }
        LossName::SsimLoss => {
            want(2)?;
            scalar(name, losses::ssim_loss(&image(&tensors[0])?, &image(&tensors[1])?)?)
        }
        LossName::CycleL1 => {
            want(2)?;
            scalar(name, losses::cycle_l1(&image(&tensors[0])?, &image(&tensors[1])?)?)
        }
        LossName::PatchganMs => {
            let side: GanSide = param(params, "side")?;
            let scales = match side {
                GanSide::Generator => {
                    want(2)?;
                    vec![
                        ScaleScores { real: None, fake: plane(&tensors[0])? },
                        ScaleScores { real: None, fake: plane(&tensors[1])? },
                    ]
                }
                GanSide::Discriminator => {
                    want(4)?;
                    vec![
                        ScaleScores { real: Some(plane(&tensors[0])?), fake: plane(&tensors[1])? },
                        ScaleScores { real: Some(plane(&tensors[2])?), fake: plane(&tensors[3])? },
                    ]
                }
            };
            scalar(name, losses::patchgan_ms_loss(&scales, side)?)
        }
        LossName::Combine => {
            want(0)?;
            let terms: BTreeMap<String, f64> = param(params, "terms")?;
            let mut weights = match params.get("preset") {
                Some(p) => LossWeights::preset(p.as_str().ok_or_else(|| anyhow!("params: preset must be a string"))?)?,
                None => LossWeights::default(),
            };
            let extra: BTreeMap<String, f64> = param_or(params, "weights", BTreeMap::new())?;
            weights.0.extend(extra);
            scalar(name, losses::combine_weighted(&terms, &weights)?)
        }
        LossName::Infonce => {
            want(3)?;
            let tau = param_or(params, "tau", losses::DEFAULT_TAU)?;
            scalar(name, losses::infonce_loss(&vector(&tensors[0])?, &vector(&tensors[1])?, &rows(&tensors[2])?, tau)?)
        }
        LossName::WecrestQi => {
            want(3)?;
            let q = losses::wecrest_qi(&image(&tensors[0])?, &image(&tensors[1])?, &rows(&tensors[2])?, param(params, "i")?)?;
            scalar(name, q)
        }
        LossName::StyleAdversarial => {
            want(2)?;
            let v = losses::style_adversarial_loss(
                &vector(&tensors[0])?,
                param(params, "real_style")?,
                &vector(&tensors[1])?,
                param(params, "fake_index")?,
            )?;
            flagged(name, v)
        }
        LossName::Pix2pixGen => {
            want(2)?;
            let v = losses::pix2pix_gen_loss(
                param(params, "d_fake")?,
                &image(&tensors[0])?,
                &image(&tensors[1])?,
                param_or(params, "lambda", 100.0)?,
            )?;
            flagged(name, v)
        }
        LossName::Pix2pixDis => {
            want(0)?;
            let v = losses::pix2pix_dis_loss(param(params, "d_real")?, param(params, "d_fake")?, param_or(params, "lambda", 1.0)?)?;
            flagged(name, v)
        }
        LossName::DwtHaar => {
            want(1)?;
            let mode: DwtMode = param_or(params, "mode", DwtMode::Luminance)?;
            let img = image(&tensors[0])?;
            let bands = losses::dwt_haar(&img, mode)?;
            let planes: Vec<&Plane> = bands.iter().flat_map(|b| b.planes()).collect();
            let (w, h) = (planes[0].width, planes[0].height);
            let data = planes.iter().flat_map(|p| p.data.iter().map(|&v| v as f32)).collect();
            let out = Tensor::new(vec![planes.len() as u32, h as u32, w as u32], data)?;
            let path = tensor_out.ok_or_else(|| anyhow!("dwt_haar needs --tensor-out"))?;
            write_tensor(&out, path)?;
            json!({ "loss": "dwt_haar", "planes": planes.len(), "energy": bands.iter().map(HaarBands::energy).sum::<f64>() })
        }
        LossName::IdwtHaar => {
            want(1)?;
            let t = &tensors[0];
            let [k, h, w] = t.dims[..] else { bail!("idwt_haar expects [4k, H, W], got {:?}", t.dims) };
            ensure!(k % 4 == 0 && k > 0, "idwt_haar expects a multiple of 4 planes, got {k}");
            let (h, w) = (h as usize, w as usize);
            let vals = t.to_f64();
            let plane_at = |i: usize| Plane::new(w, h, vals[i * w * h..(i + 1) * w * h].to_vec());
            let mut bands = Vec::new();
            for b in 0..(k as usize / 4) {
                bands.push(HaarBands { ll: plane_at(4 * b)?, lh: plane_at(4 * b + 1)?, hl: plane_at(4 * b + 2)?, hh: plane_at(4 * b + 3)? });
            }
            let recon = losses::idwt_haar(&bands)?;
            let data = recon.iter().flat_map(|p| p.data.iter().map(|&v| v as f32)).collect();
            let out = Tensor::new(vec![recon.len() as u32, 2 * h as u32, 2 * w as u32], data)?;
            let path = tensor_out.ok_or_else(|| anyhow!("idwt_haar needs --tensor-out"))?;
            write_tensor(&out, path)?;
            json!({ "loss": "idwt_haar", "planes": recon.len() })
        }
    })
}
