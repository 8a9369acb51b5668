use std::fs;
use std::path::{Path, PathBuf};

use crate::data::{DataError, Dataset, LabeledExample};
use crate::tensor::Tensor;

fn sorted_entries(dir: &Path, want_dirs: bool) -> Result<Vec<PathBuf>, DataError> {
    let io = |source| DataError::Io { path: dir.to_path_buf(), source };
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let entry = entry.map_err(io)?;
        if entry.file_name().to_string_lossy().starts_with('.') {
            continue;
        }
        let is_dir = entry.file_type().map_err(io)?.is_dir();
        if is_dir == want_dirs {
            out.push(entry.path());
        }
    }
    out.sort();
    Ok(out)
}

fn read_gray(path: &Path) -> Result<Tensor, DataError> {
    let img = image::open(path)
        .map_err(|e| DataError::UnreadableImage { path: path.to_path_buf(), reason: e.to_string() })?
        .to_luma8();
    let (w, h) = img.dimensions();
    let data = img.into_raw().into_iter().map(|p| p as f32 / 255.0).collect();
    Tensor::new(vec![h as usize, w as usize, 1], data)
        .map_err(|e| DataError::UnreadableImage { path: path.to_path_buf(), reason: e.to_string() })
}

/// Loads a tree with one subdirectory per class. Classes and files are taken
/// in lexicographic order; images are read as 8-bit grayscale.
pub fn load_image_directory(root: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let root = root.as_ref();
    let classes = sorted_entries(root, true)?;
    if classes.is_empty() {
        return Err(DataError::NoClasses(root.to_path_buf()));
    }
    let mut examples = Vec::new();
    let mut names = Vec::new();
    let mut shape: Option<Vec<usize>> = None;
    for (label, dir) in classes.iter().enumerate() {
        let files = sorted_entries(dir, false)?;
        if files.is_empty() {
            return Err(DataError::EmptyClass(dir.clone()));
        }
        for file in files {
            let image = read_gray(&file)?;
            match &shape {
                None => shape = Some(image.shape().to_vec()),
                Some(s) if s != image.shape() => {
                    return Err(DataError::DimensionMismatch(format!(
                        "{} is {:?}, earlier images are {:?}",
                        file.display(),
                        image.shape(),
                        s
                    )))
                }
                _ => {}
            }
            examples.push(LabeledExample { image, label });
        }
        names.push(dir.file_name().unwrap_or_default().to_string_lossy().into_owned());
    }
    let s = shape.expect("at least one image");
    Dataset::new(examples, names, [s[0], s[1], s[2]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{GrayImage, Luma};

    fn tree(classes: &[&str], per_class: u8) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for (ci, c) in classes.iter().enumerate() {
            let sub = dir.path().join(c);
            fs::create_dir(&sub).unwrap();
            for i in 0..per_class {
                let img = GrayImage::from_pixel(3, 2, Luma([ci as u8 * 10 + i]));
                img.save(sub.join(format!("{i:03}.png"))).unwrap();
            }
        }
        dir
    }

    #[test]
    fn classes_in_lexicographic_order() {
        let names = ["surprise", "angry", "sad", "disgust", "happy", "fear", "neutral"];
        let dir = tree(&names, 2);
        let ds = load_image_directory(dir.path()).unwrap();
        let mut sorted = names.to_vec();
        sorted.sort();
        assert_eq!(ds.class_names, sorted);
        assert_eq!(ds.num_classes(), 7);
        assert_eq!(ds.image_shape, [2, 3, 1]);
        assert_eq!(ds.class_counts(), vec![2; 7]);
        let again = load_image_directory(dir.path()).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn errors() {
        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(load_image_directory(empty.path()), Err(DataError::NoClasses(_))));

        let dir = tree(&["a"], 1);
        fs::create_dir(dir.path().join("b")).unwrap();
        assert!(matches!(load_image_directory(dir.path()), Err(DataError::EmptyClass(_))));

        let dir = tree(&["a"], 1);
        fs::write(dir.path().join("a").join("zz.png"), b"not an image").unwrap();
        match load_image_directory(dir.path()) {
            Err(DataError::UnreadableImage { path, .. }) => assert!(path.ends_with("zz.png")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
