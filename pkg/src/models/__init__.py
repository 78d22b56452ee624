"""Models Package - Channel simulation and recurrent detector networks"""
