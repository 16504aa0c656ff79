use std::path::Path;

use aseshm::detect::OcsvmModel;
use aseshm::sigproc::FeatureTensor;
use aseshm::simulator::read_recordings;
use aseshm::store::Artifact;
use aseshm::tensor::CpFactors;
use aseshm::Result;

fn fmt_list(v: impl IntoIterator<Item = f64>) -> String {
    v.into_iter().map(|x| format!("{x:.6e}")).collect::<Vec<_>>().join(", ")
}

fn recordings(path: &Path) -> Result<()> {
    let (rec, side) = read_recordings(path)?;
    println!("recordings    {}", path.display());
    println!("label         {}", rec.label.as_str());
    println!("sensors       {} {:?}", rec.n_sensors(), rec.sensor_ids);
    println!("sample rate   {} Hz", rec.sample_rate);
    println!("duration      {:.3} s", rec.duration());
    println!("events        {}", rec.n_events());
    println!("noise sigma   {:.6e}", rec.noise_sigma);
    println!("seed          {}", side.seed);
    println!("config hash   {}", side.config_hash);
    Ok(())
}

fn artifact(path: &Path) -> Result<()> {
    let art = Artifact::read(path)?;
    println!("artifact      {}", path.display());
    println!("kind          {}", art.kind);
    for a in art.array_infos() {
        println!("array         {} {:?}", a.name, a.shape);
    }
    match art.kind.as_str() {
        "cp-factors" => {
            let f = CpFactors::from_artifact(&art)?;
            let [i, j, k] = f.dims();
            println!("rank          {}", f.rank());
            println!("shapes        A {i}x{r}, B {j}x{r}, C {k}x{r}", r = f.rank());
            println!("lambda        {}", fmt_list(f.weights.iter().copied()));
            println!("fit error     {:.6e}", f.relative_error());
            println!("iterations    {} (converged: {})", f.iterations(), f.converged);
        }
        "ocsvm-model" => {
            let m = OcsvmModel::from_artifact(&art)?;
            println!("nu            {}", m.nu);
            println!("gamma         {}", m.gamma);
            println!("rho           {:.6e}", m.rho);
            println!("train size    {}", m.n_train);
            println!("support       {}", m.n_support());
            println!("dimension     {}", m.dim);
        }
        "feature-tensor" => {
            let t = FeatureTensor::from_artifact(&art)?;
            let damaged = t.event_labels.iter().filter(|l| l.is_damaged()).count();
            println!("dims          {:?} (feature x sensor x event)", t.dims());
            println!("sensors       {}", t.sensor_labels.join(", "));
            println!("events        {} healthy, {damaged} damaged", t.n_events() - damaged);
            println!("config hash   {}", t.config_hash);
        }
        "embedding" => {
            let (shape, _) = art.array("train")?;
            println!("rank          {}", shape.get(1).copied().unwrap_or(0));
            println!("train points  {}", shape.first().copied().unwrap_or(0));
            println!("eval points   {}", art.array("eval")?.0.first().copied().unwrap_or(0));
        }
        _ => println!("meta          {}", art.meta),
    }
    Ok(())
}

/// Prints a summary of a recordings CSV or a binary artifact.
pub fn inspect(path: &Path) -> Result<()> {
    if path.extension().is_some_and(|e| e == "csv") {
        recordings(path)
    } else {
        artifact(path)
    }
}
