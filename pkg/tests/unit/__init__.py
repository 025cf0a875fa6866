# Unit tests for supportlab modules
