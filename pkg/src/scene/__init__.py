"""City model, epoch data and JSON file ingestion."""
