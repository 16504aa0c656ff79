use aseshm::config::PipelineConfig;

#[test]
fn shipped_default_config_matches_builtin_defaults() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../config/default.json");
    let shipped = PipelineConfig::load(std::path::Path::new(path)).unwrap();
    assert_eq!(shipped, PipelineConfig::default());
    assert_eq!(shipped.hash(), PipelineConfig::default().hash());
}
