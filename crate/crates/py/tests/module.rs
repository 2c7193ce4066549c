use pyo3::prelude::*;
use pyo3::types::{IntoPyDict, PyModule};

fn with_module(f: impl for<'py> FnOnce(Python<'py>, &Bound<'py, PyModule>) -> PyResult<()>) {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "uht").unwrap();
        uht::uht(&m).unwrap();
        f(py, &m).unwrap();
    });
}

#[test]
fn encode_decode_through_the_module() {
    with_module(|_, m| {
        let word = vec![(10.0, 20.0), (60.0, 20.0), (110.0, 20.0), (110.0, 40.0), (60.0, 40.0), (10.0, 40.0)];
        let rendered = m.getattr("render_groundtruth")?.call1((vec![word.clone()], 130usize, 60usize))?;
        let heatmap = rendered.get_item(0)?;
        let max: f32 = heatmap.call_method0("max_value")?.extract()?;
        assert_eq!(max, 1.0);
        let dets = m.getattr("decode")?.call1((heatmap,))?;
        assert_eq!(dets.len()?, 1);
        let polygon: Vec<(f64, f64)> = dets.get_item(0)?.getattr("polygon")?.extract()?;
        let iou: f64 = m.getattr("polygon_iou")?.call1((polygon, word))?.extract()?;
        assert!(iou >= 0.5, "{iou}");
        Ok(())
    });
}

#[test]
fn heatmap_bytes_round_trip_and_losses() {
    with_module(|_, m| {
        let cls = m.getattr("Heatmap")?;
        let mut values = vec![0.0f32; 100];
        values[42] = 1.0;
        let pred = cls.call1((10usize, 10usize, values))?;
        let zero = cls.call1((10usize, 10usize))?;
        let bytes = pred.call_method0("to_bytes")?;
        let back = cls.call_method1("from_bytes", (bytes,))?;
        let a: Vec<f32> = back.call_method0("values")?.extract()?;
        let b: Vec<f32> = pred.call_method0("values")?.extract()?;
        assert_eq!(a, b);
        let reg: f64 = m.getattr("loss_reg")?.call1((&pred, &zero))?.extract()?;
        assert!((reg - 0.01).abs() < 1e-12);
        let k: usize = m.getattr("kernel_size")?.call1((750usize,))?.extract()?;
        assert_eq!(k, 9);
        Ok(())
    });
}

#[test]
fn bad_input_raises_value_error() {
    with_module(|py, m| {
        let err = m.getattr("Heatmap")?.call1((3usize, 3usize, vec![0.0f32; 4])).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py));
        let err = m.getattr("decode")?.call((m.getattr("Heatmap")?.call1((4usize, 4usize))?,), Some(&[("preset", "nope")].into_py_dict(py)?)).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py));
        Ok(())
    });
}
