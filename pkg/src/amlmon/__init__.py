"""Transaction-monitoring engine with learned behavior profiles."""
