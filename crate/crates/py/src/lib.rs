use pyo3::prelude::*;

#[pymodule]
fn hbs_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
