# Tests for graphbus
