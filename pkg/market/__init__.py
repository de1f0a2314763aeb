"""Market data model, case files, economic dispatch and KKT accounting."""
