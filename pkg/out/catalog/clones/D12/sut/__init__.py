"""Reference system under test: a miniature university information system.

This package is self-contained (standard library only, relative imports
only) so that the defect seeder can copy it, patch it and run the copy
side by side with the baseline.
"""
