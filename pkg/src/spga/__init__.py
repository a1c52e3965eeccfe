"""Statistical positive sample generation and gradient sensitive loss for online tracking."""
