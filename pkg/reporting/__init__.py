# Reporting package initialization