use pyo3::prelude::*;

#[pymodule]
fn flowmine_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
