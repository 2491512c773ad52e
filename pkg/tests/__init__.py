# Test suite for bocoa
