"""Unit test package for sgflow."""
